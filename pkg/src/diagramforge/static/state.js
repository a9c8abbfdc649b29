/** Client-side view model mirroring the session resource. */
function toCard(v) {
    return {
        index: v.index,
        createdFrom: v.created_from,
        language: v.language,
        code: v.code,
        compileOk: v.compile_ok,
        roundsUsed: v.rounds_used,
        verifyVerdict: v.verify_verdict,
        image: v.image,
        errorExcerpts: v.error_excerpts,
    };
}
export function fromSession(response, activeIndex) {
    const cards = response.versions.map(toCard);
    let active = activeIndex ?? cards.length - 1;
    if (active >= cards.length)
        active = cards.length - 1;
    if (cards.length === 0)
        active = -1;
    return {
        sessionId: response.session_id,
        status: response.status,
        cards,
        activeIndex: active,
    };
}
/** Parent card of the given card, resolved through created_from (1-based). */
export function parentOf(view, card) {
    if (card.createdFrom === null)
        return null;
    return view.cards.find((c) => c.index === card.createdFrom) ?? null;
}

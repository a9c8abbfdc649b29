/** Client-side view model mirroring the session resource. */

import type { SessionResponse, VersionSummary } from "./api.js";

export interface VersionCard {
  index: number; // 1-based, as reported by the API
  createdFrom: number | null;
  language: string;
  code: string;
  compileOk: boolean;
  roundsUsed: number;
  verifyVerdict: string;
  image: string | null;
  errorExcerpts: string[];
}

export interface SessionView {
  sessionId: string;
  status: string;
  cards: VersionCard[];
  activeIndex: number; // 0-based position into cards; -1 when empty
}

function toCard(v: VersionSummary): VersionCard {
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

export function fromSession(
  response: SessionResponse,
  activeIndex?: number,
): SessionView {
  const cards = response.versions.map(toCard);
  let active = activeIndex ?? cards.length - 1;
  if (active >= cards.length) active = cards.length - 1;
  if (cards.length === 0) active = -1;
  return {
    sessionId: response.session_id,
    status: response.status,
    cards,
    activeIndex: active,
  };
}

/** Parent card of the given card, resolved through created_from (1-based). */
export function parentOf(
  view: SessionView,
  card: VersionCard,
): VersionCard | null {
  if (card.createdFrom === null) return null;
  return view.cards.find((c) => c.index === card.createdFrom) ?? null;
}

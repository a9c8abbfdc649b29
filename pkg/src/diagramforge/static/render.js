/** Pure HTML rendering of the application state. */
import { lineDiff } from "./diff.js";
import { parentOf } from "./state.js";
export function escapeHtml(text) {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}
function badge(card) {
    return card.compileOk
        ? '<span class="badge ok">compiled</span>'
        : '<span class="badge failed">failed</span>';
}
function thumbnail(card, api) {
    if (card.image === null) {
        return '<div class="thumb placeholder">no image</div>';
    }
    return `<img class="thumb" src="${api.artifactUrl(card.image)}" alt="version ${card.index}">`;
}
function versionCard(card, position, active, api) {
    return [
        `<div class="version-card${active ? " active" : ""}" data-version="${position}">`,
        thumbnail(card, api),
        `<div class="meta">v${card.index} ${badge(card)} ` +
            `<span class="rounds">rounds: ${card.roundsUsed}</span> ` +
            `<span class="verdict">${escapeHtml(card.verifyVerdict)}</span></div>`,
        "</div>",
    ].join("");
}
function diffPane(view, card) {
    const parent = parentOf(view, card);
    if (parent === null)
        return "";
    const lines = lineDiff(parent.code, card.code)
        .map((line) => `<span class="diff-${line.kind}">${escapeHtml(line.text)}</span>`)
        .join("\n");
    return `<pre class="diff" data-parent="${parent.index}">${lines}</pre>`;
}
function detailPane(view, api) {
    if (view.activeIndex < 0)
        return '<div class="detail empty"></div>';
    const card = view.cards[view.activeIndex];
    const body = card.compileOk
        ? `<img class="full" src="${card.image ? api.artifactUrl(card.image) : ""}" alt="diagram">`
        : `<pre class="errors">${escapeHtml(card.errorExcerpts.join("\n"))}</pre>`;
    return [
        '<div class="detail">',
        body,
        `<pre class="code">${escapeHtml(card.code)}</pre>`,
        diffPane(view, card),
        "</div>",
    ].join("");
}
export function render(state, api) {
    const parts = [];
    if (state.banner !== null) {
        parts.push(`<div class="banner" data-code="${escapeHtml(state.banner.code)}">` +
            `${escapeHtml(state.banner.message)}</div>`);
    }
    const view = state.view;
    const canEdit = view !== null && view.cards.length > 0;
    parts.push('<form class="instruction">', `<input id="instruction" type="text" value="${escapeHtml(state.pendingInput)}"` +
        ` placeholder="Describe the diagram or the edit">`, `<button id="generate" type="button"${state.busy ? " disabled" : ""}>Generate</button>`, `<button id="edit" type="button"${!canEdit || state.busy ? " disabled" : ""}>Edit</button>`, "</form>", '<div class="upload"><input id="upload" type="file" accept=".png,.jpg,.jpeg"></div>');
    if (state.codePanel !== null) {
        parts.push('<div class="code-panel">', `<pre id="recovered-code">${escapeHtml(state.codePanel.source)}</pre>`, '<button id="copy-code" type="button">Copy</button>', "</div>");
    }
    if (view !== null) {
        parts.push(`<div class="history" data-session="${escapeHtml(view.sessionId)}">`, ...view.cards.map((card, position) => versionCard(card, position, position === view.activeIndex, api)), "</div>", detailPane(view, api));
    }
    return parts.join("\n");
}

/** Pure HTML builders for the session screen (no DOM access, no math). */

import { QueryItem, QueryPayload, Recommendation, Diagnostics, HistoryRow } from "./api.js";
import { sparklineSvg } from "./sparkline.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function cardLabel(item: QueryItem): string {
  if (item.attributes && item.attributes.length > 0) {
    return item.attributes.join(" ∧ ");
  }
  if (item.name) return item.name;
  if (item.id) return item.id;
  return `Option ${item.position + 1}`;
}

export function renderQuery(query: QueryPayload): string {
  const cards = query.items
    .map(
      (item) =>
        `<button class="card" data-choice="${item.position}">` +
        `<span class="card-label">${esc(cardLabel(item))}</span>` +
        (item.id && (item.attributes?.length ?? 0) === 0
          ? `<span class="card-id">${esc(item.id)}</span>`
          : "") +
        `</button>`,
    )
    .join("");
  return (
    `<div class="query" data-turn="${query.turn}">` +
    `<h2>Which do you prefer? <span class="turn">turn ${query.turn + 1}</span></h2>` +
    `<div class="cards">${cards}</div>` +
    `<button class="skip" data-action="skip">No preference / skip</button>` +
    `</div>`
  );
}

export function renderRecommendations(recs: Recommendation[]): string {
  if (recs.length === 0) return `<p class="empty">Answer a query to see picks.</p>`;
  const rows = recs
    .map(
      (r, i) =>
        `<li><span class="rank">${i + 1}.</span> ` +
        `<span class="rec-name">${esc(r.name || r.id)}</span> ` +
        `<span class="rec-eu">${r.eu.toFixed(3)}</span></li>`,
    )
    .join("");
  return `<ol class="recs">${rows}</ol>`;
}

export function renderDiagnostics(diag: Diagnostics | null, demo: boolean): string {
  if (!diag) return `<p class="empty">No diagnostics yet.</p>`;
  const parts = [
    `<div class="diag-row"><span>EVOI</span>${sparklineSvg(diag.evoi, "EVOI per turn")}</div>`,
    `<div class="diag-row"><span>ESS</span><span class="diag-value">${diag.ess.toFixed(1)}</span></div>`,
  ];
  if (demo && diag.regret) {
    parts.push(
      `<div class="diag-row"><span>regret</span>${sparklineSvg(diag.regret, "regret per turn")}</div>`,
    );
  }
  return parts.join("");
}

export function renderHistory(history: HistoryRow[]): string {
  if (history.length === 0) return "";
  const rows = history
    .map(
      (h) =>
        `<li>q${h.query_idx + 1}: [${h.slate_ids.map(esc).join(", ")}] ` +
        `→ ${esc(h.slate_ids[h.response_idx] ?? String(h.response_idx))}</li>`,
    )
    .join("");
  return `<details class="history"><summary>${history.length} answered</summary><ul>${rows}</ul></details>`;
}

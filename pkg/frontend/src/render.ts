/** HTML-string renderers. Pure functions of view data, no DOM access,
 * so every displayed number is traceable to an API response field. */

import { cellIntensities } from "./heatmap.js";
import { formatWeight, type HopDetailRow } from "./hopDetail.js";
import type { AskResponse, DisambiguationEntry, TableDoc, TestQuestionEntry } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** The sample table as a grid; with a response, cells are tinted by
 * their summed attention (normalized by the max cell). */
export function renderTableGrid(table: TableDoc, response: AskResponse | null): string {
  let intensities: number[][] | null = null;
  if (response) {
    intensities = cellIntensities(table, response.triples, response.attention);
  }
  const head = table.columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const body = table.rows
    .map((row, r) => {
      const cells = row
        .map((value, c) => {
          const heat = intensities ? intensities[r][c] : 0;
          const style = intensities
            ? ` style="background: rgba(234, 88, 12, ${(0.08 + 0.72 * heat).toFixed(3)})"`
            : "";
          return `<td${style} data-heat="${heat.toFixed(4)}">${escapeHtml(value)}</td>`;
        })
        .join("");
      return `<tr><th>row${r + 1}</th>${cells}</tr>`;
    })
    .join("");
  return `<table class="grid"><thead><tr><th></th>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

export function renderAnswer(response: AskResponse): string {
  const topk = response.distribution_topk
    .map(
      (e) =>
        `<li><code>${escapeHtml(e.token)}</code> <span>${e.probability.toFixed(4)}</span></li>`,
    )
    .join("");
  return (
    `<div class="answer-line">Answer: <strong>${escapeHtml(response.answer)}</strong>` +
    ` <span class="confidence">confidence ${response.confidence.toFixed(4)}</span></div>` +
    `<details><summary>top answers</summary><ul class="topk">${topk}</ul></details>`
  );
}

/** Substitutions and drops; empty string when every token was known. */
export function renderDisambiguation(entries: DisambiguationEntry[]): string {
  const events = entries.filter((e) => e.status !== "in_vocab");
  if (events.length === 0) {
    return "";
  }
  const items = events
    .map((e) => {
      if (e.status === "mapped") {
        const sim = e.similarity === undefined ? "" : ` (similarity ${e.similarity.toFixed(2)})`;
        return `<li class="mapped">${escapeHtml(e.token)} &rarr; ${escapeHtml(
          e.mapped_to ?? "?",
        )}${sim}</li>`;
      }
      const best =
        e.best_similarity === null || e.best_similarity === undefined
          ? "no vector"
          : `best similarity ${e.best_similarity.toFixed(2)}`;
      return `<li class="dropped">${escapeHtml(e.token)} dropped (${best})</li>`;
    })
    .join("");
  return `<div class="disambiguation"><h3>Query words resolved</h3><ul>${items}</ul></div>`;
}

/** One row per triple, one numeric column per hop, 3 decimals, with the
 * per-hop column sums in the footer. */
export function renderHopDetail(rows: HopDetailRow[], sums: number[], sortHop: number | null): string {
  const hops = sums.length;
  const headers = Array.from({ length: hops }, (_, k) => {
    const marker = sortHop === k ? " ▾" : "";
    return `<th class="sortable" data-hop="${k}">hop ${k + 1}${marker}</th>`;
  }).join("");
  const body = rows
    .map((row) => {
      const cells = row.weights.map((w) => `<td>${formatWeight(w)}</td>`).join("");
      return `<tr><td class="triple">${row.triple.map(escapeHtml).join(" ")}</td>${cells}</tr>`;
    })
    .join("");
  const footer = sums.map((s) => `<td>${formatWeight(s)}</td>`).join("");
  return (
    `<table class="hops"><thead><tr><th>triple</th>${headers}</tr></thead>` +
    `<tbody>${body}</tbody>` +
    `<tfoot><tr><td>sum</td>${footer}</tr></tfoot></table>`
  );
}

export function renderError(message: string): string {
  return `<div class="banner error" role="alert">${escapeHtml(message)}<button id="retry">retry</button></div>`;
}

export function renderTestQuestionOption(entry: TestQuestionEntry, index: number): string {
  const label = `[${entry.perturbation}] ${entry.question}`;
  return `<option value="${index}">${escapeHtml(label)}</option>`;
}

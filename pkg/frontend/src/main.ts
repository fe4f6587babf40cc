/** DOM wiring for the demo page. All rendering goes through the pure
 * helpers in render.ts; this file only moves strings into elements. */

import { askQuestion, buildAskPayload, getHealth, getTables, getTestQuestions } from "./api.js";
import { hopColumnSums, hopDetailRows, sortByHop } from "./hopDetail.js";
import {
  escapeHtml,
  renderAnswer,
  renderDisambiguation,
  renderError,
  renderHopDetail,
  renderTableGrid,
  renderTestQuestionOption,
} from "./render.js";
import {
  applyError,
  applyResponse,
  beginAsk,
  initialState,
  selectTable,
  selectTestQuestion,
  setQuestion,
  setSortHop,
  withTables,
  type ViewState,
} from "./state.js";

let state: ViewState = initialState();

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

function update(next: ViewState): void {
  state = next;
  redraw();
}

function redraw(): void {
  const tablePicker = el<HTMLSelectElement>("table-picker");
  if (tablePicker.options.length !== state.tables.length) {
    tablePicker.innerHTML = state.tables
      .map(
        (t) =>
          `<option value="${escapeHtml(t.table_id ?? "")}">${escapeHtml(t.table_id ?? "inline")}</option>`,
      )
      .join("");
  }
  if (state.activeTableId !== null) {
    tablePicker.value = state.activeTableId;
  }

  const questionPicker = el<HTMLSelectElement>("question-picker");
  if (questionPicker.options.length !== state.testQuestions.length + 1) {
    questionPicker.innerHTML =
      '<option value="">held-out test questions&hellip;</option>' +
      state.testQuestions.map(renderTestQuestionOption).join("");
  }

  const questionBox = el<HTMLInputElement>("question");
  if (questionBox.value !== state.question) {
    questionBox.value = state.question;
  }

  el("table-view").innerHTML = state.activeTable
    ? renderTableGrid(state.activeTable, state.lastResponse)
    : "<p>no table selected</p>";

  const results = el("results");
  if (state.error) {
    results.innerHTML = renderError(state.error);
    const retry = document.getElementById("retry");
    retry?.addEventListener("click", () => void ask());
  } else if (state.lastResponse) {
    const response = state.lastResponse;
    const rows = hopDetailRows(response.triples, response.attention);
    const sums = hopColumnSums(rows, response.attention.length);
    const ordered = state.sortHop === null ? rows : sortByHop(rows, state.sortHop);
    results.innerHTML =
      renderAnswer(response) +
      renderDisambiguation(response.disambiguation) +
      `<h3>Attention per memory hop</h3>` +
      renderHopDetail(ordered, sums, state.sortHop);
    results.querySelectorAll<HTMLElement>("th.sortable").forEach((th) => {
      th.addEventListener("click", () => {
        const hop = Number(th.dataset.hop);
        update(setSortHop(state, state.sortHop === hop ? null : hop));
      });
    });
  } else {
    results.innerHTML = state.loading ? "<p>asking&hellip;</p>" : "";
  }

  el<HTMLButtonElement>("ask").disabled = state.loading || !state.activeTable;
}

async function ask(): Promise<void> {
  const begun = beginAsk(state);
  update(begun.state);
  try {
    const payload = buildAskPayload(state.question, state.activeTable, state.activeTableId);
    const response = await askQuestion(payload);
    update(applyResponse(state, begun.token, response));
  } catch (error) {
    update(applyError(state, begun.token, error instanceof Error ? error.message : String(error)));
  }
}

async function boot(): Promise<void> {
  el("question").addEventListener("input", (event) => {
    state = setQuestion(state, (event.target as HTMLInputElement).value);
  });
  el("ask").addEventListener("click", () => void ask());
  el("question").addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") {
      void ask();
    }
  });
  el<HTMLSelectElement>("table-picker").addEventListener("change", (event) => {
    update(selectTable(state, (event.target as HTMLSelectElement).value));
  });
  el<HTMLSelectElement>("question-picker").addEventListener("change", (event) => {
    const value = (event.target as HTMLSelectElement).value;
    if (value !== "") {
      update(selectTestQuestion(state, Number(value)));
    }
  });

  try {
    const health = await getHealth();
    el("health").textContent =
      health.status === "ok"
        ? `model ready: ${health.hops} hops, vocabulary ${health.vocab_size}`
        : `model status: ${health.status}`;
  } catch (error) {
    el("health").textContent = "backend unreachable";
  }

  try {
    const tables = await getTables();
    update(withTables(state, tables));
  } catch {
    update({ ...state, error: "could not load the sample tables" });
  }
  try {
    const questions = await getTestQuestions();
    update({ ...state, testQuestions: questions });
  } catch {
    // No test set deployed; the picker just stays empty.
  }
}

document.addEventListener("DOMContentLoaded", () => void boot());

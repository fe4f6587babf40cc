import { describe, expect, it } from "vitest";

import { hopColumnSums, hopDetailRows } from "../src/hopDetail.js";
import {
  escapeHtml,
  renderAnswer,
  renderDisambiguation,
  renderError,
  renderHopDetail,
  renderTableGrid,
} from "../src/render.js";
import type { AskResponse, TableDoc } from "../src/types.js";
import askFixture from "./fixtures/ask_response.json";
import mappedFixture from "./fixtures/ask_response_disambiguated.json";

const table = askFixture.table as TableDoc;
const response = askFixture.response as AskResponse;
const mappedResponse = mappedFixture.response as AskResponse;

describe("renderTableGrid", () => {
  it("renders every cell and tints the answer cell strongest", () => {
    const html = renderTableGrid(table, response);
    for (const row of table.rows) {
      for (const value of row) {
        expect(html).toContain(`>${value}</td>`);
      }
    }
    const heats = [...html.matchAll(/data-heat="([0-9.]+)"/g)].map((m) => Number(m[1]));
    const cells = [...html.matchAll(/data-heat="[0-9.]+">([^<]*)<\/td>/g)].map((m) => m[1]);
    const max = Math.max(...heats);
    expect(cells[heats.indexOf(max)]).toBe(response.answer);
    expect(max).toBe(1);
  });

  it("renders without highlights when there is no response", () => {
    const html = renderTableGrid(table, null);
    expect(html).not.toContain("background:");
  });
});

describe("renderAnswer", () => {
  it("shows the answer token and confidence", () => {
    const html = renderAnswer(response);
    expect(html).toContain("<strong>170</strong>");
    expect(html).toContain(`confidence ${response.confidence.toFixed(4)}`);
  });
});

describe("renderDisambiguation", () => {
  it("is empty when every token was in vocabulary", () => {
    expect(renderDisambiguation(response.disambiguation)).toBe("");
  });

  it("shows the substitution reported by the API", () => {
    const html = renderDisambiguation(mappedResponse.disambiguation);
    expect(html).toContain("emigration");
    expect(html).toContain("emigration_total");
    expect(html).toMatch(/similarity 0\.\d\d/);
  });

  it("shows dropped tokens with their best similarity", () => {
    const html = renderDisambiguation([
      { token: "qqqq", status: "dropped", best_similarity: 0.31 },
    ]);
    expect(html).toContain("qqqq dropped (best similarity 0.31)");
  });
});

describe("renderHopDetail", () => {
  it("renders three sortable hop columns and their sums", () => {
    const rows = hopDetailRows(response.triples, response.attention);
    const sums = hopColumnSums(rows, response.attention.length);
    const html = renderHopDetail(rows, sums, null);
    expect(html).toContain("hop 1");
    expect(html).toContain("hop 2");
    expect(html).toContain("hop 3");
    expect((html.match(/class="sortable"/g) ?? []).length).toBe(3);
    expect((html.match(/>1\.000</g) ?? []).length).toBe(3);
    expect(html).toMatch(/<td>0\.\d{3}<\/td>/);
  });
});

describe("renderError", () => {
  it("is a visible banner with a retry button", () => {
    const html = renderError("connection lost & retry");
    expect(html).toContain('role="alert"');
    expect(html).toContain("connection lost &amp; retry");
    expect(html).toContain("retry</button>");
  });
});

describe("escapeHtml", () => {
  it("escapes markup characters", () => {
    expect(escapeHtml('<b a="1">&\'</b>')).toBe("&lt;b a=&quot;1&quot;&gt;&amp;&#39;&lt;/b&gt;");
  });
});

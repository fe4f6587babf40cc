import { describe, expect, it } from "vitest";

import { formatWeight, hopColumnSums, hopDetailRows, sortByHop } from "../src/hopDetail.js";
import type { AskResponse } from "../src/types.js";
import askFixture from "./fixtures/ask_response.json";

const fixtureResponse = askFixture.response as AskResponse;

describe("hopDetailRows", () => {
  it("builds one row per triple with one weight per hop", () => {
    const rows = hopDetailRows(fixtureResponse.triples, fixtureResponse.attention);
    expect(rows).toHaveLength(fixtureResponse.triples.length);
    for (const row of rows) {
      expect(row.weights).toHaveLength(3);
    }
  });

  it("has exactly three hop columns each summing to about one", () => {
    const rows = hopDetailRows(fixtureResponse.triples, fixtureResponse.attention);
    const sums = hopColumnSums(rows, fixtureResponse.attention.length);
    expect(sums).toHaveLength(3);
    for (const sum of sums) {
      expect(Math.abs(sum - 1.0)).toBeLessThan(1e-6);
      expect(formatWeight(sum)).toBe("1.000");
    }
  });
});

describe("sortByHop", () => {
  const rows = [
    { triple: ["row1", "a", "x"], weights: [0.2, 0.5] },
    { triple: ["row2", "a", "y"], weights: [0.5, 0.3] },
    { triple: ["row3", "a", "z"], weights: [0.2, 0.2] },
    { triple: ["row4", "a", "w"], weights: [0.1, 0.0] },
  ];

  it("sorts descending by the chosen hop", () => {
    const sorted = sortByHop(rows, 0);
    expect(sorted.map((r) => r.triple[0])).toEqual(["row2", "row1", "row3", "row4"]);
  });

  it("is stable: equal keys keep their original order", () => {
    const sorted = sortByHop(rows, 0);
    const tied = sorted.filter((r) => r.weights[0] === 0.2);
    expect(tied.map((r) => r.triple[0])).toEqual(["row1", "row3"]);
    const twice = sortByHop(sortByHop(rows, 0), 0);
    expect(twice).toEqual(sorted);
  });

  it("does not mutate its input", () => {
    const before = rows.map((r) => r.triple[0]);
    sortByHop(rows, 1);
    expect(rows.map((r) => r.triple[0])).toEqual(before);
  });
});

describe("formatWeight", () => {
  it("renders three decimals", () => {
    expect(formatWeight(0.5)).toBe("0.500");
    expect(formatWeight(0.87654)).toBe("0.877");
  });
});

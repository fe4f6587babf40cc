/** Pure heatmap math: map per-hop slot attention onto table cells.
 *
 * The UI never recomputes inference quantities; everything here is a
 * rearrangement of numbers the API already returned.
 */

import type { TableDoc } from "./types.js";

export class AlignmentError extends Error {}

/** Sum attention across hops for each memory slot. */
export function summedSlotWeights(attention: number[][]): number[] {
  if (attention.length === 0) {
    throw new AlignmentError("attention matrix has no hops");
  }
  const slots = attention[0].length;
  const summed = new Array<number>(slots).fill(0);
  for (const row of attention) {
    if (row.length !== slots) {
      throw new AlignmentError("attention rows have inconsistent lengths");
    }
    for (let i = 0; i < slots; i++) {
      summed[i] += row[i];
    }
  }
  return summed;
}

function rowIndexFromId(rowId: string): number {
  const match = /^row([0-9]+)$/.exec(rowId);
  if (!match) {
    throw new AlignmentError(`bad row id ${rowId}`);
  }
  return parseInt(match[1], 10) - 1;
}

/**
 * Per-cell highlight intensity in [0, 1]: the summed (across hops)
 * attention of the triple matching each (row, column), normalized by the
 * maximum cell weight. Cells without a matching triple stay at 0.
 */
export function cellIntensities(
  table: TableDoc,
  triples: string[][],
  attention: number[][],
): number[][] {
  const summed = summedSlotWeights(attention);
  if (summed.length !== triples.length) {
    throw new AlignmentError(
      `attention covers ${summed.length} slots but there are ${triples.length} triples`,
    );
  }
  const weights = table.rows.map(() => new Array<number>(table.columns.length).fill(0));
  triples.forEach((triple, slot) => {
    if (triple.length !== 3) {
      throw new AlignmentError(`triple ${slot} is not a (row, column, value) triple`);
    }
    const [rowId, column, value] = triple;
    const r = rowIndexFromId(rowId);
    const c = table.columns.indexOf(column);
    if (r < 0 || r >= table.rows.length || c < 0) {
      throw new AlignmentError(`triple (${rowId}, ${column}, ${value}) is not a table cell`);
    }
    weights[r][c] += summed[slot];
  });
  const max = Math.max(...weights.flat());
  if (max <= 0) {
    return weights.map((row) => row.map(() => 0));
  }
  return weights.map((row) => row.map((w) => Math.min(1, Math.max(0, w / max))));
}

/** The (row, column) position of the most intense cell. */
export function peakCell(intensities: number[][]): { row: number; column: number } {
  let best = { row: 0, column: 0 };
  let bestValue = -Infinity;
  intensities.forEach((row, r) =>
    row.forEach((value, c) => {
      if (value > bestValue) {
        bestValue = value;
        best = { row: r, column: c };
      }
    }),
  );
  return best;
}

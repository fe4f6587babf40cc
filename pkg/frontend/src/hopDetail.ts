/** Per-hop attention detail: one row per triple, one column per hop. */

export interface HopDetailRow {
  triple: string[];
  weights: number[];
}

export function hopDetailRows(triples: string[][], attention: number[][]): HopDetailRow[] {
  return triples.map((triple, slot) => ({
    triple,
    weights: attention.map((hop) => hop[slot]),
  }));
}

/** Column sums; each is ~1.000 for a softmax-attention model. */
export function hopColumnSums(rows: HopDetailRow[], hops: number): number[] {
  const sums = new Array<number>(hops).fill(0);
  for (const row of rows) {
    row.weights.forEach((w, k) => {
      sums[k] += w;
    });
  }
  return sums;
}

/** Stable sort (ties keep their original order) by one hop's weight. */
export function sortByHop(
  rows: HopDetailRow[],
  hopIndex: number,
  descending = true,
): HopDetailRow[] {
  return rows
    .map((row, index) => ({ row, index }))
    .sort((a, b) => {
      const delta = a.row.weights[hopIndex] - b.row.weights[hopIndex];
      if (delta !== 0) {
        return descending ? -delta : delta;
      }
      return a.index - b.index;
    })
    .map((entry) => entry.row);
}

export function formatWeight(w: number): string {
  return w.toFixed(3);
}

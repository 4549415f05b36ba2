/**
 * Client-side mirror of the server's grid geometry.
 *
 * The server is authoritative; this module exists so the canvas can highlight
 * the cells a drawn box will activate before the query is submitted. Every
 * formula matches the server bit for bit (same IEEE 754 double arithmetic,
 * same traversal order), which the end-to-end parity test enforces.
 */

export interface Rect {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export type GridKindId = "static-5" | "static-9";
export type SelectionModeId = "any-overlap" | "argmax-iou";

export interface GridCell {
  id: string;
  rect: Rect;
}

export interface Grid {
  kind: GridKindId;
  enlargement: number;
  cells: GridCell[];
}

export function rect(x1: number, y1: number, x2: number, y2: number): Rect {
  if (!(x1 >= 0 && x1 < x2 && x2 <= 1 && y1 >= 0 && y1 < y2 && y2 <= 1)) {
    throw new Error(
      `degenerate box: (${x1}, ${y1}, ${x2}, ${y2}) ` +
        "must satisfy 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1",
    );
  }
  return { x1, y1, x2, y2 };
}

export function rectArea(r: Rect): number {
  return (r.x2 - r.x1) * (r.y2 - r.y1);
}

/** Intersection-over-union; 0 iff the interiors are disjoint. */
export function iou(a: Rect, b: Rect): number {
  const ix = Math.min(a.x2, b.x2) - Math.max(a.x1, b.x1);
  const iy = Math.min(a.y2, b.y2) - Math.max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) {
    return 0;
  }
  const inter = ix * iy;
  const union = rectArea(a) + rectArea(b) - inter;
  return inter / union;
}

export function buildGrid(kind: GridKindId): Grid {
  if (kind === "static-9") {
    const cells: GridCell[] = [];
    for (const row of [1, 2, 3]) {
      for (const col of [1, 2, 3]) {
        cells.push({
          id: `r${row}c${col}`,
          rect: { x1: (col - 1) / 3, y1: (row - 1) / 3, x2: col / 3, y2: row / 3 },
        });
      }
    }
    return { kind, enlargement: 0, cells };
  }
  return {
    kind,
    enlargement: 0,
    cells: [
      { id: "top_left", rect: { x1: 0, y1: 0, x2: 0.5, y2: 0.5 } },
      { id: "top_right", rect: { x1: 0.5, y1: 0, x2: 1, y2: 0.5 } },
      { id: "bottom_left", rect: { x1: 0, y1: 0.5, x2: 0.5, y2: 1 } },
      { id: "bottom_right", rect: { x1: 0.5, y1: 0.5, x2: 1, y2: 1 } },
      { id: "center", rect: { x1: 0.25, y1: 0.25, x2: 0.75, y2: 0.75 } },
    ],
  };
}

/** Largest enlargement keeping every cell of the base layout in-frame. */
export function maxEnlargement(kind: GridKindId): number {
  let bound = Infinity;
  for (const { rect: r } of buildGrid(kind).cells) {
    for (const [lo, hi] of [
      [r.x1, r.x2],
      [r.y1, r.y2],
    ] as const) {
      const atLo = lo === 0;
      const atHi = hi === 1;
      if (atLo && atHi) {
        continue;
      }
      if (atLo || atHi) {
        bound = Math.min(bound, 1 - (hi - lo));
      } else {
        bound = Math.min(bound, 2 * Math.min(lo, 1 - hi));
      }
    }
  }
  return bound;
}

function enlargeSpan(lo: number, hi: number, e: number): [number, number] {
  // Border side: grow inward by e. Interior: e/2 on each side. Spanning: fixed.
  const atLo = lo === 0;
  const atHi = hi === 1;
  if (atLo && atHi) {
    return [lo, hi];
  }
  if (atLo) {
    return [lo, hi + e];
  }
  if (atHi) {
    return [lo - e, hi];
  }
  return [lo - e / 2, hi + e / 2];
}

/** Grow every cell's width and height by the frame fraction e. */
export function enlargeGrid(grid: Grid, e: number): Grid {
  if (grid.enlargement !== 0) {
    throw new Error("enlargeGrid expects a base (enlargement 0) layout");
  }
  const bound = maxEnlargement(grid.kind);
  if (!(e >= 0 && e < bound)) {
    throw new Error(`enlargement ${e} outside [0, ${bound}) for ${grid.kind}`);
  }
  if (e === 0) {
    return grid;
  }
  return {
    kind: grid.kind,
    enlargement: e,
    cells: grid.cells.map(({ id, rect: r }) => {
      const [x1, x2] = enlargeSpan(r.x1, r.x2, e);
      const [y1, y2] = enlargeSpan(r.y1, r.y2, e);
      return { id, rect: { x1, y1, x2, y2 } };
    }),
  };
}

/**
 * Grid cells relevant to a query box.
 *
 * "any-overlap" returns every cell with IoU(cell, box) > 0; "argmax-iou" the
 * single best cell, ties broken by layout order. Any in-frame box overlaps at
 * least one cell, so the result is never empty.
 */
export function selectCells(
  grid: Grid,
  box: Rect,
  mode: SelectionModeId,
): string[] {
  if (mode === "any-overlap") {
    return grid.cells.filter(({ rect: r }) => iou(r, box) > 0).map((c) => c.id);
  }
  let bestId: string | null = null;
  let bestIou = -1;
  for (const { id, rect: r } of grid.cells) {
    const value = iou(r, box);
    if (value > bestIou) {
      bestId = id;
      bestIou = value;
    }
  }
  return [bestId as string];
}

/** The grid a given model/enlargement pair selects against, or null. */
export function gridForModel(model: string, enlargement: number): Grid | null {
  if (model === "static-5") {
    return enlargeGrid(buildGrid("static-5"), enlargement);
  }
  if (model === "static-9") {
    return enlargeGrid(buildGrid("static-9"), enlargement);
  }
  return null;
}

/**
 * Results grid rendering: one card per hit with a deterministic placeholder
 * thumbnail and a mini-grid overlay marking the hit's matched cells.
 */

import type { Hit } from "./api.js";
import type { Grid } from "./geometry.js";

/** Stable pastel color per image id, so reruns look identical. */
export function placeholderColor(imageId: string): string {
  let h = 2166136261;
  for (let i = 0; i < imageId.length; i++) {
    h ^= imageId.charCodeAt(i);
    h = Math.imul(h, 16777619);
  }
  const hue = ((h >>> 0) % 360 + 360) % 360;
  return `hsl(${hue}, 45%, 38%)`;
}

function miniGridSvg(grid: Grid, matched: string[], selected: string[]): string {
  const cells = grid.cells
    .map(({ id, rect }) => {
      const x = (rect.x1 * 100).toFixed(2);
      const y = (rect.y1 * 56.25).toFixed(2);
      const w = ((rect.x2 - rect.x1) * 100).toFixed(2);
      const h = ((rect.y2 - rect.y1) * 56.25).toFixed(2);
      const matchedHere = matched.includes(id);
      const selectedHere = selected.includes(id);
      const fill = matchedHere
        ? "rgba(63, 185, 80, 0.55)"
        : selectedHere
          ? "rgba(88, 166, 255, 0.2)"
          : "none";
      return (
        `<rect x="${x}" y="${y}" width="${w}" height="${h}" ` +
        `fill="${fill}" stroke="rgba(255,255,255,0.5)" stroke-width="0.6"/>`
      );
    })
    .join("");
  return (
    `<svg viewBox="0 0 100 56.25" xmlns="http://www.w3.org/2000/svg" ` +
    `class="mini-grid">${cells}</svg>`
  );
}

export function renderResults(
  container: HTMLElement,
  hits: Hit[],
  grid: Grid | null,
  selected: string[],
): void {
  container.textContent = "";
  if (hits.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent = "no results";
    container.appendChild(empty);
    return;
  }
  for (const hit of hits) {
    const card = document.createElement("figure");
    card.className = "hit";
    const thumb = document.createElement("div");
    thumb.className = "thumb";
    thumb.style.background = placeholderColor(hit.image_id);
    thumb.title = hit.thumbnail_uri ?? hit.image_id;
    if (grid !== null && hit.matched_cell_ids !== undefined) {
      thumb.innerHTML = miniGridSvg(grid, hit.matched_cell_ids, selected);
    }
    const caption = document.createElement("figcaption");
    caption.textContent = `#${hit.rank} ${hit.image_id} (${hit.score.toFixed(4)})`;
    card.appendChild(thumb);
    card.appendChild(caption);
    container.appendChild(card);
  }
}

export function renderHistory(
  container: HTMLElement,
  entries: { text: string; model: string; targetRank: number | null }[],
): void {
  container.textContent = "";
  for (const entry of [...entries].reverse()) {
    const row = document.createElement("li");
    const rank = entry.targetRank === null ? "-" : `#${entry.targetRank}`;
    row.textContent = `${entry.model}: "${entry.text}" -> target ${rank}`;
    container.appendChild(row);
  }
}

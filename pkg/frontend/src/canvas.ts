/**
 * The drawing surface: a canvas the user drags a box on, with grid-cell
 * outlines and live highlighting of the cells the box activates.
 */

import { rect, type Grid, type Rect } from "./geometry.js";

const FRAME_ASPECT = 16 / 9;
const MIN_DRAG_PX = 4;

export interface CanvasStyle {
  frame: string;
  gridLine: string;
  anyOverlapFill: string;
  argmaxFill: string;
  box: string;
  boxDimmed: string;
}

const DEFAULT_STYLE: CanvasStyle = {
  frame: "#1c2128",
  gridLine: "rgba(255, 255, 255, 0.25)",
  anyOverlapFill: "rgba(88, 166, 255, 0.25)",
  argmaxFill: "rgba(63, 185, 80, 0.35)",
  box: "#f0883e",
  boxDimmed: "rgba(240, 136, 62, 0.35)",
};

export class BoxCanvas {
  private ctx: CanvasRenderingContext2D;
  private dragStart: { x: number; y: number } | null = null;
  private dragNow: { x: number; y: number } | null = null;
  box: Rect | null = null;
  grid: Grid | null = null;
  highlighted: string[] = [];
  highlightMode: "any-overlap" | "argmax-iou" = "any-overlap";
  dimmed = false;
  onBoxChange: (box: Rect | null) => void = () => {};

  constructor(
    private canvas: HTMLCanvasElement,
    private style: CanvasStyle = DEFAULT_STYLE,
  ) {
    const ctx = canvas.getContext("2d");
    if (ctx === null) {
      throw new Error("2d canvas context unavailable");
    }
    this.ctx = ctx;
    canvas.addEventListener("pointerdown", this.onDown);
    canvas.addEventListener("pointermove", this.onMove);
    canvas.addEventListener("pointerup", this.onUp);
    canvas.addEventListener("dblclick", () => this.setBox(null));
    this.fitToParent();
    this.render();
  }

  fitToParent(): void {
    const width = this.canvas.clientWidth || this.canvas.width || 640;
    this.canvas.width = width;
    this.canvas.height = Math.round(width / FRAME_ASPECT);
  }

  setBox(box: Rect | null): void {
    this.box = box;
    this.onBoxChange(box);
    this.render();
  }

  /** Normalize a pointer event to frame coordinates, clamped to [0, 1]. */
  private toFrame(event: PointerEvent): { x: number; y: number } {
    const bounds = this.canvas.getBoundingClientRect();
    const x = (event.clientX - bounds.left) / bounds.width;
    const y = (event.clientY - bounds.top) / bounds.height;
    return { x: Math.min(1, Math.max(0, x)), y: Math.min(1, Math.max(0, y)) };
  }

  private onDown = (event: PointerEvent): void => {
    this.canvas.setPointerCapture(event.pointerId);
    this.dragStart = this.toFrame(event);
    this.dragNow = this.dragStart;
  };

  private onMove = (event: PointerEvent): void => {
    if (this.dragStart === null) {
      return;
    }
    this.dragNow = this.toFrame(event);
    this.render();
  };

  private onUp = (event: PointerEvent): void => {
    if (this.dragStart === null) {
      return;
    }
    const a = this.dragStart;
    const b = this.toFrame(event);
    this.dragStart = null;
    this.dragNow = null;
    const bounds = this.canvas.getBoundingClientRect();
    const wPx = Math.abs(a.x - b.x) * bounds.width;
    const hPx = Math.abs(a.y - b.y) * bounds.height;
    if (wPx < MIN_DRAG_PX || hPx < MIN_DRAG_PX) {
      this.render();
      return; // a click, not a drag: keep the existing box
    }
    const x1 = Math.min(a.x, b.x);
    const x2 = Math.max(a.x, b.x);
    const y1 = Math.min(a.y, b.y);
    const y2 = Math.max(a.y, b.y);
    try {
      this.setBox(rect(x1, y1, x2, y2));
    } catch {
      this.render(); // degenerate after clamping; ignore the gesture
    }
  };

  private px(r: Rect): [number, number, number, number] {
    const { width, height } = this.canvas;
    return [
      r.x1 * width,
      r.y1 * height,
      (r.x2 - r.x1) * width,
      (r.y2 - r.y1) * height,
    ];
  }

  render(): void {
    const { width, height } = this.canvas;
    const ctx = this.ctx;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = this.style.frame;
    ctx.fillRect(0, 0, width, height);

    if (this.grid !== null) {
      const fill =
        this.highlightMode === "any-overlap"
          ? this.style.anyOverlapFill
          : this.style.argmaxFill;
      for (const cell of this.grid.cells) {
        const [x, y, w, h] = this.px(cell.rect);
        if (this.highlighted.includes(cell.id)) {
          ctx.fillStyle = fill;
          ctx.fillRect(x, y, w, h);
        }
        ctx.strokeStyle = this.style.gridLine;
        ctx.lineWidth = 1;
        ctx.strokeRect(x, y, w, h);
      }
    }

    const live =
      this.dragStart !== null && this.dragNow !== null
        ? {
            x1: Math.min(this.dragStart.x, this.dragNow.x),
            y1: Math.min(this.dragStart.y, this.dragNow.y),
            x2: Math.max(this.dragStart.x, this.dragNow.x),
            y2: Math.max(this.dragStart.y, this.dragNow.y),
          }
        : this.box;
    if (live !== null && live.x2 > live.x1 && live.y2 > live.y1) {
      const [x, y, w, h] = this.px(live);
      ctx.strokeStyle = this.dimmed ? this.style.boxDimmed : this.style.box;
      ctx.lineWidth = 2;
      ctx.strokeRect(x, y, w, h);
    }
  }
}

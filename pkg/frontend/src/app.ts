/**
 * Wires the canvas, the form controls, and the API client into the
 * draw-and-search loop.
 */

import { ApiClient, QueryCancelled, ServiceError } from "./api.js";
import { BoxCanvas } from "./canvas.js";
import { gridForModel, maxEnlargement } from "./geometry.js";
import { renderHistory, renderResults } from "./results.js";
import {
  applyError,
  applyResponse,
  canSubmit,
  initialState,
  needsBox,
  previewCells,
  usesGrid,
  type QueryState,
} from "./state.js";

interface Elements {
  canvas: HTMLCanvasElement;
  text: HTMLInputElement;
  model: HTMLSelectElement;
  mode: HTMLSelectElement;
  enlargement: HTMLSelectElement;
  topK: HTMLInputElement;
  target: HTMLInputElement;
  baseUrl: HTMLInputElement;
  submit: HTMLButtonElement;
  status: HTMLElement;
  results: HTMLElement;
  history: HTMLElement;
  boxReadout: HTMLElement;
}

function grab(root: Document): Elements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = root.getElementById(id);
    if (el === null) {
      throw new Error(`missing element #${id}`);
    }
    return el as T;
  };
  return {
    canvas: byId("draw-canvas"),
    text: byId("query-text"),
    model: byId("model-picker"),
    mode: byId("mode-picker"),
    enlargement: byId("enlargement-picker"),
    topK: byId("top-k"),
    target: byId("target-id"),
    baseUrl: byId("base-url"),
    submit: byId("submit"),
    status: byId("status"),
    results: byId("results"),
    history: byId("history"),
    boxReadout: byId("box-readout"),
  };
}

export class App {
  state: QueryState = initialState();
  client: ApiClient;
  private canvas: BoxCanvas;

  constructor(private el: Elements) {
    this.client = new ApiClient(el.baseUrl.value || "http://127.0.0.1:8031");
    this.canvas = new BoxCanvas(el.canvas);
    this.canvas.onBoxChange = (box) => {
      this.state = { ...this.state, box };
      this.refresh();
    };

    el.text.addEventListener("input", () => {
      this.state = { ...this.state, text: el.text.value };
      this.refresh();
    });
    el.model.addEventListener("change", () => {
      this.state = { ...this.state, model: el.model.value };
      this.refresh();
    });
    el.mode.addEventListener("change", () => {
      this.state = {
        ...this.state,
        selectionMode: el.mode.value as QueryState["selectionMode"],
      };
      this.refresh();
    });
    el.enlargement.addEventListener("change", () => {
      this.state = { ...this.state, enlargement: Number(el.enlargement.value) };
      this.refresh();
    });
    el.topK.addEventListener("change", () => {
      this.state = { ...this.state, topK: Number(el.topK.value) || 12 };
    });
    el.target.addEventListener("input", () => {
      this.state = { ...this.state, targetImageId: el.target.value };
    });
    el.baseUrl.addEventListener("change", () => {
      this.client = new ApiClient(el.baseUrl.value);
    });
    el.submit.addEventListener("click", () => void this.submit());
    el.text.addEventListener("keydown", (event) => {
      if (event.key === "Enter") {
        void this.submit();
      }
    });
  }

  async boot(): Promise<void> {
    try {
      const [models, health] = await Promise.all([
        this.client.models(),
        this.client.health(),
      ]);
      this.el.model.textContent = "";
      for (const name of models.models) {
        const option = document.createElement("option");
        option.value = name;
        option.textContent = name;
        this.el.model.appendChild(option);
      }
      this.el.model.value = this.state.model;
      this.setStatus(
        `connected: ${health.images} images, stores [${health.stores.join(", ")}]`,
      );
    } catch (err) {
      this.setStatus(`service unreachable: ${(err as Error).message}`, true);
    }
    this.refresh();
  }

  private setStatus(message: string, isError = false): void {
    this.el.status.textContent = message;
    this.el.status.classList.toggle("error", isError);
  }

  /** Re-derive everything the controls and canvas show from the state. */
  refresh(): void {
    const { state } = this;
    this.canvas.grid = usesGrid(state.model)
      ? gridForModel(state.model, state.enlargement)
      : null;
    this.canvas.highlighted = previewCells(state);
    this.canvas.highlightMode = state.selectionMode;
    this.canvas.dimmed = !needsBox(state.model);
    this.canvas.render();

    const bound = usesGrid(state.model)
      ? maxEnlargement(state.model as "static-5" | "static-9")
      : 1;
    for (const option of Array.from(this.el.enlargement.options)) {
      option.disabled = Number(option.value) >= bound;
    }

    this.el.submit.disabled = !canSubmit(state);
    this.el.boxReadout.textContent =
      state.box === null
        ? needsBox(state.model)
          ? "draw a box on the canvas"
          : "no box (whole-image query)"
        : `box [${state.box.x1.toFixed(3)}, ${state.box.y1.toFixed(3)}, ` +
          `${state.box.x2.toFixed(3)}, ${state.box.y2.toFixed(3)}]` +
          (this.canvas.highlighted.length > 0
            ? ` -> cells [${this.canvas.highlighted.join(", ")}]`
            : "");
    if (state.lastError !== null) {
      this.setStatus(state.lastError, true);
    }
  }

  async submit(): Promise<void> {
    const { state } = this;
    if (!canSubmit(state)) {
      return;
    }
    const sendBox = needsBox(state.model) && state.box !== null;
    this.setStatus("searching...");
    try {
      const response = await this.client.query({
        text: state.text,
        model: state.model,
        box: sendBox && state.box !== null
          ? [state.box.x1, state.box.y1, state.box.x2, state.box.y2]
          : null,
        selection_mode: state.selectionMode,
        enlargement: state.enlargement,
        top_k: state.topK,
      });
      this.state = applyResponse(state, response);
      this.setStatus(
        `${response.results.length} of ${response.total_images} images in ` +
          `${response.timing_ms.toFixed(1)} ms`,
      );
      renderResults(
        this.el.results,
        response.results,
        usesGrid(state.model)
          ? gridForModel(state.model, state.enlargement)
          : null,
        response.selected_cell_ids,
      );
      renderHistory(this.el.history, this.state.history);
      this.refresh();
    } catch (err) {
      if (err instanceof QueryCancelled) {
        return; // a newer query took over
      }
      const message =
        err instanceof ServiceError && err.field !== undefined
          ? `${err.message} (field: ${err.field})`
          : (err as Error).message;
      this.state = applyError(this.state, message);
      this.refresh();
    }
  }
}

export function start(): void {
  const app = new App(grab(document));
  void app.boot();
}

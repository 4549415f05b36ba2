/**
 * Session state for the query canvas: the drawn box, query knobs, the last
 * response, and a history of submissions for session analysis.
 */

import type { QueryResponse } from "./api.js";
import { gridForModel, selectCells, type Rect, type SelectionModeId } from "./geometry.js";

export interface HistoryEntry {
  text: string;
  model: string;
  box: Rect | null;
  /** 1-based rank of the marked target in the response, if it was returned. */
  targetRank: number | null;
  totalImages: number;
  timingMs: number;
}

export interface QueryState {
  text: string;
  model: string;
  box: Rect | null;
  selectionMode: SelectionModeId;
  enlargement: number;
  topK: number;
  targetImageId: string;
  lastResponse: QueryResponse | null;
  lastError: string | null;
  history: HistoryEntry[];
}

export function initialState(): QueryState {
  return {
    text: "",
    model: "whole-image",
    box: null,
    selectionMode: "any-overlap",
    enlargement: 0,
    topK: 12,
    targetImageId: "",
    lastResponse: null,
    lastError: null,
    history: [],
  };
}

/** Models that cannot run without a drawn box. */
export function needsBox(model: string): boolean {
  return model !== "whole-image";
}

/** Grid models get live cell highlighting; others do not. */
export function usesGrid(model: string): boolean {
  return model === "static-5" || model === "static-9";
}

/**
 * The cells the current box would activate, for pre-submit highlighting.
 * Empty for non-grid models or when no box is drawn.
 */
export function previewCells(state: QueryState): string[] {
  if (!usesGrid(state.model) || state.box === null) {
    return [];
  }
  const grid = gridForModel(state.model, state.enlargement);
  if (grid === null) {
    return [];
  }
  return selectCells(grid, state.box, state.selectionMode);
}

/** Whether the state describes a submittable query. */
export function canSubmit(state: QueryState): boolean {
  return state.text.length > 0 && (!needsBox(state.model) || state.box !== null);
}

/** Fold a successful response into the state, appending to history. */
export function applyResponse(
  state: QueryState,
  response: QueryResponse,
): QueryState {
  const target = state.targetImageId.trim();
  const hit = target
    ? response.results.find((h) => h.image_id === target)
    : undefined;
  const entry: HistoryEntry = {
    text: state.text,
    model: state.model,
    box: state.box,
    targetRank: hit ? hit.rank : null,
    totalImages: response.total_images,
    timingMs: response.timing_ms,
  };
  return {
    ...state,
    lastResponse: response,
    lastError: null,
    history: [...state.history, entry],
  };
}

/** Record a failure without losing the drawn box or previous results. */
export function applyError(state: QueryState, message: string): QueryState {
  return { ...state, lastError: message };
}

"""HTTP facade over the retrieval engine for interactive clients.

Endpoints (JSON over HTTP/1.1):
    POST /v1/query        run one query, return the top-k hits
    GET  /v1/grids        available grid layouts with cell rectangles
    GET  /v1/models       search model names
    GET  /v1/reports/{id} stored evaluation reports
    GET  /v1/health       liveness probe

The service holds immutable stores; repeating a request yields a
byte-identical response apart from the timing field.
"""

from __future__ import annotations

import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .embedder import EmbedderError
from .geometry import (
    GridKind,
    GridLayout,
    Rect,
    SelectionMode,
    build_grid,
    enlarge_grid,
)
from .retrieval import Model, QuerySpec, cell_score_columns, run_query
from .store import EmbeddingStore, format_region_set_id, grid_for_region_set

MAX_TOP_K = 1000
DEFAULT_TOP_K = 10


class BadRequest(Exception):
    """Client-side request problem, reported with the offending field."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(message)
        self.field = field
        self.message = message


def parse_box(raw) -> Rect:
    if isinstance(raw, dict):
        try:
            values = [raw["x1"], raw["y1"], raw["x2"], raw["y2"]]
        except KeyError as exc:
            raise BadRequest("box", f"box is missing {exc}") from exc
    elif isinstance(raw, (list, tuple)) and len(raw) == 4:
        values = list(raw)
    else:
        raise BadRequest("box", "box must be [x1, y1, x2, y2] or an object")
    try:
        x1, y1, x2, y2 = (float(v) for v in values)
        return Rect(x1, y1, x2, y2)
    except (TypeError, ValueError) as exc:
        raise BadRequest("box", str(exc)) from exc


def parse_query_request(body: dict) -> tuple[QuerySpec, int]:
    """Validate a /v1/query body into a QuerySpec and top_k."""
    if not isinstance(body, dict):
        raise BadRequest("body", "request body must be a JSON object")
    text = body.get("text")
    if not isinstance(text, str) or not text:
        raise BadRequest("text", "text must be a non-empty string")
    try:
        model = Model.parse(str(body.get("model", "")))
    except ValueError as exc:
        raise BadRequest("model", str(exc)) from exc
    box = None
    if body.get("box") is not None:
        box = parse_box(body["box"])
    if model.needs_box and box is None:
        raise BadRequest("box", f"model {model.value} requires a box")
    mode = SelectionMode.ANY_OVERLAP
    if body.get("selection_mode") is not None:
        try:
            mode = SelectionMode(str(body["selection_mode"]))
        except ValueError as exc:
            raise BadRequest("selection_mode", str(exc)) from exc
    enlargement = 0.0
    if body.get("enlargement") is not None:
        try:
            enlargement = float(body["enlargement"])
        except (TypeError, ValueError) as exc:
            raise BadRequest("enlargement", str(exc)) from exc
    top_k = body.get("top_k", DEFAULT_TOP_K)
    if not isinstance(top_k, int) or isinstance(top_k, bool):
        raise BadRequest("top_k", "top_k must be an integer")
    return (
        QuerySpec(
            text=text,
            model=model,
            box=box,
            selection_mode=mode,
            enlargement=enlargement,
        ),
        top_k,
    )


def _matched_cell_map(
    store: EmbeddingStore,
    grid,
    selected: list[str],
    f_t: np.ndarray,
) -> dict[str, list[str]]:
    """Per image, the selected cells attaining its max score bit-exactly.

    Reuses the ranking's own score columns so equality against the pooled
    max is exact rather than a recomputation that could round differently.
    """
    image_ids = sorted(store.image_ids)
    columns = cell_score_columns(store, grid, image_ids, selected, f_t)
    best = columns.max(axis=1)
    return {
        image_id: [
            cid for cid, s in zip(selected, columns[i]) if s == best[i]
        ]
        for i, image_id in enumerate(image_ids)
    }


def execute_query(
    spec: QuerySpec,
    top_k: int,
    stores: dict[str, EmbeddingStore],
    embedder,
    manifest: dict | None = None,
) -> dict:
    """Run a validated query and build the response body (minus timing).

    Shared by the HTTP endpoint and the command line so both emit identical
    payloads for the same request.
    """
    ranking, selected = run_query(spec, stores, embedder, manifest=manifest)
    thumbnails = {
        image_id: info.uri for image_id, info in (manifest or {}).items()
    }
    grid_model = spec.model in (Model.STATIC5, Model.STATIC9)
    matched: dict[str, list[str]] = {}
    if grid_model:
        base = "static5" if spec.model is Model.STATIC5 else "static9"
        store = stores[format_region_set_id(base, spec.enlargement)]
        grid = enlarge_grid(build_grid(spec.model.grid_kind), spec.enlargement)
        f_t = embedder.embed_text([spec.text])[0]
        matched = _matched_cell_map(store, grid, selected, f_t)
    results = []
    for rank, (image_id, score) in enumerate(ranking.top(top_k), start=1):
        hit = {
            "image_id": image_id,
            "score": score,
            "rank": rank,
            "thumbnail_uri": thumbnails.get(image_id),
        }
        if grid_model:
            hit["matched_cell_ids"] = matched[image_id]
        results.append(hit)
    return {
        "query": {
            "text": spec.text,
            "model": spec.model.value,
            "box": list(spec.box.as_tuple()) if spec.box else None,
            "selection_mode": spec.selection_mode.value,
            "enlargement": spec.enlargement,
            "top_k": top_k,
        },
        "selected_cell_ids": selected,
        "total_images": len(ranking),
        "results": results,
    }


def _grid_cells_json(grid: GridLayout) -> list[dict]:
    return [
        {"id": cid, "x1": r.x1, "y1": r.y1, "x2": r.x2, "y2": r.y2}
        for cid, r in grid.cells
    ]


def _error(status: int, field: str | None, message: str) -> JSONResponse:
    body: dict = {"error": {"message": message}}
    if field is not None:
        body["error"]["field"] = field
    return JSONResponse(status_code=status, content=body)


def create_app(
    stores: dict[str, EmbeddingStore],
    embedder,
    manifest: dict | None = None,
    reports: dict[str, dict] | None = None,
) -> FastAPI:
    """Assemble the service around loaded stores and an embedder."""
    app = FastAPI(title="gridsearch service")
    # The browser UI is served from a different origin than the API.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    reports = dict(reports or {})
    grids: dict[str, GridLayout] = {}
    for region_set_id in stores:
        grid = grid_for_region_set(region_set_id)
        if grid is not None:
            grids[region_set_id] = grid

    @app.post("/v1/query")
    async def query(request: Request):
        started = time.perf_counter()
        try:
            body = await request.json()
        except Exception:
            return _error(400, "body", "request body is not valid JSON")
        try:
            spec, top_k = parse_query_request(body)
        except BadRequest as exc:
            return _error(400, exc.field, exc.message)
        except ValueError as exc:
            return _error(400, None, str(exc))
        if not (1 <= top_k <= MAX_TOP_K):
            return _error(413, "top_k", f"top_k must be within [1, {MAX_TOP_K}]")
        try:
            payload = execute_query(spec, top_k, stores, embedder, manifest)
        except EmbedderError as exc:
            return _error(502, None, f"embedder failure: {exc}")
        except KeyError as exc:
            return _error(400, "model", str(exc.args[0] if exc.args else exc))
        except ValueError as exc:
            return _error(400, None, str(exc))
        payload["timing_ms"] = (time.perf_counter() - started) * 1000.0
        return payload

    @app.get("/v1/grids")
    def list_grids():
        layouts = {
            kind.value: _grid_cells_json(build_grid(kind)) for kind in GridKind
        }
        loaded = {
            region_set_id: _grid_cells_json(grid)
            for region_set_id, grid in grids.items()
        }
        return {"grids": layouts, "loaded_region_sets": loaded}

    @app.get("/v1/models")
    def list_models():
        return {"models": [m.value for m in Model]}

    @app.get("/v1/reports/{report_id}")
    def get_report(report_id: str):
        if report_id not in reports:
            return _error(404, None, f"no report '{report_id}'")
        return reports[report_id]

    @app.get("/v1/health")
    def health():
        n_images = 0
        if stores:
            n_images = len(stores[next(iter(stores))].image_ids)
        return {"status": "ok", "stores": sorted(stores), "images": n_images}

    return app

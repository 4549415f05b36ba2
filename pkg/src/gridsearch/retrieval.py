"""The search models: whole-image, append-suffix, static-grid, theoretical
oracle, and the target-substitution probe.

All models produce a Ranking over every image in the candidate pool, ordered
by descending cosine score with ties broken by ascending image id.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .embedder import EmbedderError
from .geometry import (
    FULL_FRAME,
    GridKind,
    GridLayout,
    Rect,
    SelectionMode,
    build_grid,
    select_cells,
)
from .store import WHOLE_CELL_ID, WHOLE_REGION_SET, EmbeddingStore


class Model(str, Enum):
    WHOLE_IMAGE = "whole-image"
    APPEND_SHORT = "append-short"
    APPEND_LONG = "append-long"
    STATIC5 = "static-5"
    STATIC9 = "static-9"
    THEORETICAL = "theoretical"

    @classmethod
    def parse(cls, name: str) -> "Model":
        cleaned = name.strip().lower().replace("_", "-").replace(" ", "-")
        aliases = {
            "whole": cls.WHOLE_IMAGE,
            "wholeimage": cls.WHOLE_IMAGE,
            "static5": cls.STATIC5,
            "static9": cls.STATIC9,
            "appendshort": cls.APPEND_SHORT,
            "appendlong": cls.APPEND_LONG,
        }
        compact = cleaned.replace("-", "")
        if compact in aliases:
            return aliases[compact]
        try:
            return cls(cleaned)
        except ValueError:
            raise ValueError(f"unknown model '{name}'") from None

    @property
    def needs_box(self) -> bool:
        return self is not Model.WHOLE_IMAGE

    @property
    def grid_kind(self) -> GridKind | None:
        if self is Model.STATIC5:
            return GridKind.STATIC5
        if self is Model.STATIC9:
            return GridKind.STATIC9
        return None


class SuffixLength(str, Enum):
    SHORT = "short"
    LONG = "long"


@dataclass(frozen=True)
class QuerySpec:
    """A single retrieval query: text, optional region box, and model knobs."""

    text: str
    model: Model
    box: Rect | None = None
    selection_mode: SelectionMode = SelectionMode.ANY_OVERLAP
    enlargement: float = 0.0

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("query text must be non-empty")
        if self.model.needs_box and self.box is None:
            raise ValueError(f"model {self.model.value} requires a box")


class Ranking:
    """Images ordered by descending score; ranks are 1-based."""

    def __init__(self, entries: list[tuple[str, float]]) -> None:
        self.entries = entries
        self._rank = {image_id: i + 1 for i, (image_id, _) in enumerate(entries)}
        if len(self._rank) != len(entries):
            raise ValueError("duplicate image in ranking")

    def rank_of(self, image_id: str) -> int:
        try:
            return self._rank[image_id]
        except KeyError:
            raise KeyError(f"image '{image_id}' not in ranking") from None

    def top(self, k: int) -> list[tuple[str, float]]:
        return self.entries[: k]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _rank(image_ids: list[str], scores: np.ndarray) -> Ranking:
    # Stable sort over id-sorted input: ties resolve to ascending image_id.
    order = np.argsort(-scores, kind="stable")
    return Ranking([(image_ids[i], float(scores[i])) for i in order])


def _check_dim(store: EmbeddingStore, f_t: np.ndarray) -> np.ndarray:
    f_t = np.asarray(f_t, dtype=np.float64)
    if f_t.shape != (store.dim,):
        raise ValueError(
            f"query vector shape {f_t.shape} does not match store dim {store.dim}"
        )
    return f_t


def score_whole(store_whole: EmbeddingStore, f_t: np.ndarray) -> Ranking:
    """Rank by cosine between the text vector and each whole-image vector."""
    if store_whole.region_set_id != WHOLE_REGION_SET:
        raise ValueError(
            f"expected a '{WHOLE_REGION_SET}' store, got "
            f"'{store_whole.region_set_id}'"
        )
    f_t = _check_dim(store_whole, f_t)
    image_ids = sorted(store_whole.image_ids)
    rows = np.stack([store_whole.row(i, WHOLE_CELL_ID) for i in image_ids])
    scores = rows @ f_t
    return _rank(image_ids, scores)


def score_grid(
    store_grid: EmbeddingStore,
    grid: GridLayout,
    box: Rect,
    selection_mode: SelectionMode,
    f_t: np.ndarray,
    selection_grid: GridLayout | None = None,
) -> Ranking:
    """Rank by the best cell cosine within the query box's cell subset.

    The cell subset B is derived once from the query box and applied to every
    candidate image; each image's score is max over B of cosine(f_cell, f_t).
    By default B is selected on ``grid`` itself; pass a ``selection_grid``
    (sharing cell ids, e.g. the un-enlarged layout) to select on different
    rects while still scoring ``grid``'s embeddings.
    """
    f_t = _check_dim(store_grid, f_t)
    selected = select_cells(selection_grid or grid, box, selection_mode)
    image_ids = sorted(store_grid.image_ids)
    scores = cell_score_columns(store_grid, grid, image_ids, selected, f_t).max(
        axis=1
    )
    return _rank(image_ids, scores)


def cell_score_columns(
    store_grid: EmbeddingStore,
    grid: GridLayout,
    image_ids: list[str],
    selected: list[str],
    f_t: np.ndarray,
) -> np.ndarray:
    """Per-cell cosine columns, shape (n_images, len(selected)).

    Each column is a (n_images, dim) @ f_t product whose accumulation does
    not depend on which other cells were selected, so a cell's score is
    bit-identical across selection subsets. Max-pooling over a superset of
    cells therefore never scores below the subset's pool.
    """
    columns = np.empty((len(image_ids), len(selected)), np.float64)
    for j, cell_id in enumerate(selected):
        try:
            indices = [
                store_grid.row_index(image_id, cell_id) for image_id in image_ids
            ]
        except KeyError as exc:
            raise ValueError(
                f"store '{store_grid.region_set_id}' does not match grid "
                f"{grid.kind.value}@e={grid.enlargement:g}: {exc}"
            ) from exc
        rows = np.ascontiguousarray(store_grid.matrix[indices])
        columns[:, j] = rows @ f_t
    return columns


# ArgmaxIoU cell of Static-5 -> positional phrase. The long variant extends
# each phrase with " part of the image"; "center" reads better without "part".
SHORT_SUFFIXES: dict[str, str] = {
    "top_left": "in the upper left",
    "top_right": "in the upper right",
    "bottom_left": "in the lower left",
    "bottom_right": "in the lower right",
    "center": "in the center",
}
LONG_SUFFIXES: dict[str, str] = {
    cell: (
        phrase + " of the image"
        if cell == "center"
        else phrase + " part of the image"
    )
    for cell, phrase in SHORT_SUFFIXES.items()
}

_SUFFIX_GRID = build_grid(GridKind.STATIC5)


def suffix_for_box(
    box: Rect,
    length: SuffixLength,
    phrases: dict[str, str] | None = None,
) -> str:
    """The positional phrase for a box: keyed by its best Static-5 cell."""
    (cell,) = select_cells(_SUFFIX_GRID, box, SelectionMode.ARGMAX_IOU)
    if phrases is not None:
        return phrases[cell]
    table = SHORT_SUFFIXES if length is SuffixLength.SHORT else LONG_SUFFIXES
    return table[cell]


def append_suffix(
    text: str,
    box: Rect,
    length: SuffixLength,
    phrases: dict[str, str] | None = None,
) -> str:
    """Append the box's positional phrase to the query text."""
    return text + " " + suffix_for_box(box, length, phrases)


def score_theoretical(
    manifest: dict,
    box: Rect,
    f_t: np.ndarray,
    embedder,
) -> Ranking:
    """Oracle: embed the same crop box on every image and rank the cosines."""
    f_t = np.asarray(f_t, dtype=np.float64)
    image_ids = sorted(manifest)
    if not image_ids:
        raise ValueError("empty manifest")
    scores = np.empty(len(image_ids), dtype=np.float64)
    for i, image_id in enumerate(image_ids):
        info = manifest[image_id]
        uri = getattr(info, "uri", None) or str(info)
        try:
            crop = embedder.embed_crop(uri, box)
        except EmbedderError as exc:
            raise EmbedderError(f"crop embedding failed for '{image_id}': {exc}") from exc
        if crop.shape != f_t.shape:
            raise ValueError(
                f"crop vector shape {crop.shape} does not match query {f_t.shape}"
            )
        scores[i] = float(crop @ f_t)
    return _rank(image_ids, scores)


def score_target_substitution(
    store_whole: EmbeddingStore,
    store_grid: EmbeddingStore | None,
    grid: GridLayout | None,
    box: Rect,
    target_image: str,
    f_t: np.ndarray,
    target_vector: np.ndarray | None = None,
) -> Ranking:
    """Whole-image scores everywhere except the target, which uses its
    best-IoU grid cell (or, if ``target_vector`` is given, that vector, e.g.
    a direct annotation-box crop embedding)."""
    f_t = _check_dim(store_whole, f_t)
    image_ids = sorted(store_whole.image_ids)
    if target_image not in set(image_ids):
        raise KeyError(f"target '{target_image}' not in whole-image store")
    rows = np.stack([store_whole.row(i, WHOLE_CELL_ID) for i in image_ids])
    scores = rows @ f_t
    if target_vector is None:
        if store_grid is None or grid is None:
            raise ValueError("need either a grid store + layout or a target_vector")
        (cell,) = select_cells(grid, box, SelectionMode.ARGMAX_IOU)
        target_vector = store_grid.row(target_image, cell)
    target_vector = np.asarray(target_vector, dtype=np.float64)
    idx = image_ids.index(target_image)
    scores[idx] = float(target_vector @ f_t)
    return _rank(image_ids, scores)


def run_query(
    spec: QuerySpec,
    stores: dict[str, EmbeddingStore],
    embedder,
    manifest: dict | None = None,
    grids: dict[str, GridLayout] | None = None,
) -> tuple[Ranking, list[str]]:
    """Dispatch a QuerySpec to its model; returns (ranking, selected cells).

    ``stores`` is keyed by region_set_id. The selected-cell list is empty for
    models that do not use a grid.
    """
    from .store import format_region_set_id, grid_for_region_set

    def whole_store() -> EmbeddingStore:
        if WHOLE_REGION_SET not in stores:
            raise KeyError("no whole-image store loaded")
        return stores[WHOLE_REGION_SET]

    model = spec.model
    if model is Model.WHOLE_IMAGE:
        f_t = embedder.embed_text([spec.text])[0]
        return score_whole(whole_store(), f_t), []
    assert spec.box is not None
    if model in (Model.APPEND_SHORT, Model.APPEND_LONG):
        length = (
            SuffixLength.SHORT if model is Model.APPEND_SHORT else SuffixLength.LONG
        )
        text = append_suffix(spec.text, spec.box, length)
        f_t = embedder.embed_text([text])[0]
        return score_whole(whole_store(), f_t), []
    if model is Model.THEORETICAL:
        if manifest is None:
            raise ValueError("theoretical model requires an image manifest")
        f_t = embedder.embed_text([spec.text])[0]
        return score_theoretical(manifest, spec.box, f_t, embedder), []
    base = "static5" if model is Model.STATIC5 else "static9"
    region_set_id = format_region_set_id(base, spec.enlargement)
    if region_set_id not in stores:
        raise KeyError(f"no '{region_set_id}' store loaded")
    store = stores[region_set_id]
    if grids is not None and region_set_id in grids:
        grid = grids[region_set_id]
    else:
        grid = grid_for_region_set(region_set_id)
        assert grid is not None
    f_t = embedder.embed_text([spec.text])[0]
    selected = select_cells(grid, spec.box, spec.selection_mode)
    return score_grid(store, grid, spec.box, spec.selection_mode, f_t), selected

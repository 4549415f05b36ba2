"""Normalized rectangle arithmetic, static grids, overlap enlargement, and the
bounding-box perturbation sampler.

All coordinates are frame fractions in [0, 1] with origin at the top-left,
x growing rightward and y growing downward.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Smallest side length a perturbed box may shrink to, in frame fractions.
MIN_PERTURBED_SIDE = 0.01


class GridKind(str, Enum):
    STATIC5 = "static-5"
    STATIC9 = "static-9"


class SelectionMode(str, Enum):
    ANY_OVERLAP = "any-overlap"
    ARGMAX_IOU = "argmax-iou"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle (x1, y1, x2, y2) in normalized coordinates."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x1 < self.x2 <= 1.0 and 0.0 <= self.y1 < self.y2 <= 1.0):
            raise ValueError(
                f"degenerate box: ({self.x1}, {self.y1}, {self.x2}, {self.y2}) "
                "must satisfy 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


FULL_FRAME = Rect(0.0, 0.0, 1.0, 1.0)


def iou(a: Rect, b: Rect) -> float:
    """Intersection-over-union of two rectangles; 0 iff interiors are disjoint."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


@dataclass(frozen=True)
class GridLayout:
    """An ordered set of named grid cells, optionally enlarged for overlap."""

    kind: GridKind
    enlargement: float
    cells: tuple[tuple[str, Rect], ...]

    @property
    def cell_ids(self) -> tuple[str, ...]:
        return tuple(cid for cid, _ in self.cells)

    def rect_of(self, cell_id: str) -> Rect:
        for cid, rect in self.cells:
            if cid == cell_id:
                return rect
        raise KeyError(f"no cell '{cell_id}' in {self.kind.value} layout")

    def __len__(self) -> int:
        return len(self.cells)


def build_grid(kind: GridKind) -> GridLayout:
    """Construct a base (enlargement 0) Static-5 or Static-9 layout.

    Static-9 is a uniform 3x3 tiling, row-major, cells named "r{row}c{col}".
    Static-5 is the four quadrants followed by a centered half-size cell.
    """
    if kind is GridKind.STATIC9:
        cells = tuple(
            (f"r{row}c{col}", Rect((col - 1) / 3, (row - 1) / 3, col / 3, row / 3))
            for row in (1, 2, 3)
            for col in (1, 2, 3)
        )
    elif kind is GridKind.STATIC5:
        cells = (
            ("top_left", Rect(0.0, 0.0, 0.5, 0.5)),
            ("top_right", Rect(0.5, 0.0, 1.0, 0.5)),
            ("bottom_left", Rect(0.0, 0.5, 0.5, 1.0)),
            ("bottom_right", Rect(0.5, 0.5, 1.0, 1.0)),
            ("center", Rect(0.25, 0.25, 0.75, 0.75)),
        )
    else:
        raise ValueError(f"unknown grid kind: {kind!r}")
    return GridLayout(kind=kind, enlargement=0.0, cells=cells)


def max_enlargement(kind: GridKind) -> float:
    """Largest enlargement that keeps every cell of the base layout in-frame."""
    bound = float("inf")
    for _, rect in build_grid(kind).cells:
        for lo, hi in ((rect.x1, rect.x2), (rect.y1, rect.y2)):
            at_lo, at_hi = lo == 0.0, hi == 1.0
            if at_lo and at_hi:
                continue
            if at_lo or at_hi:
                bound = min(bound, 1.0 - (hi - lo))
            else:
                bound = min(bound, 2.0 * min(lo, 1.0 - hi))
    return bound


def _enlarge_span(lo: float, hi: float, e: float) -> tuple[float, float]:
    # Border side: grow inward by e. Interior: e/2 on each side. Spanning: fixed.
    at_lo, at_hi = lo == 0.0, hi == 1.0
    if at_lo and at_hi:
        return lo, hi
    if at_lo:
        return lo, hi + e
    if at_hi:
        return lo - e, hi
    return lo - e / 2.0, hi + e / 2.0


def enlarge_grid(grid: GridLayout, e: float) -> GridLayout:
    """Grow every cell's width and height by the frame fraction ``e``.

    Cells touching a frame border on an axis extend inward on that axis;
    interior cells spread symmetrically by e/2 per side. All resulting cells
    of a layout share the same area and stay within the frame.
    """
    if grid.enlargement != 0.0:
        raise ValueError("enlarge_grid expects a base (enlargement 0) layout")
    bound = max_enlargement(grid.kind)
    if not (0.0 <= e < bound):
        raise ValueError(
            f"enlargement {e} outside [0, {bound:g}) for {grid.kind.value}"
        )
    if e == 0.0:
        return grid
    cells = []
    for cid, rect in grid.cells:
        x1, x2 = _enlarge_span(rect.x1, rect.x2, e)
        y1, y2 = _enlarge_span(rect.y1, rect.y2, e)
        cells.append((cid, Rect(x1, y1, x2, y2)))
    return GridLayout(kind=grid.kind, enlargement=e, cells=tuple(cells))


@dataclass(frozen=True)
class PerturbationSpec:
    """Gaussian box perturbation: positional shift std-dev ``sigma_shift`` and
    size scale std-dev ``sigma_area`` (around scale factor 1)."""

    sigma_shift: float
    sigma_area: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma_shift < 0 or self.sigma_area < 0:
            raise ValueError("perturbation std-devs must be non-negative")

    @property
    def is_identity(self) -> bool:
        return self.sigma_shift == 0.0 and self.sigma_area == 0.0


def normalize_sigma_area(value: float) -> float:
    """Accept the size std-dev either as a fraction (0.25) or a percentage (25)."""
    if value < 0:
        raise ValueError("sigma_area must be non-negative")
    return value / 100.0 if value > 1.0 else value


def perturbation_draws(
    spec: PerturbationSpec, draw_index: int
) -> tuple[float, float, float, float]:
    """Deterministic (d_shift_x, d_shift_y, d_area_x, d_area_y) for a draw key.

    The same (seed, draw_index) always yields the same draw, independent of
    call order, so perturbations can be shared across grid variants.
    """
    raw = np.random.default_rng([spec.seed, draw_index]).standard_normal(4)
    return (
        spec.sigma_shift * raw[0],
        spec.sigma_shift * raw[1],
        1.0 + spec.sigma_area * raw[2],
        1.0 + spec.sigma_area * raw[3],
    )


def apply_perturbation(
    box: Rect,
    d_shift_x: float,
    d_shift_y: float,
    d_area_x: float,
    d_area_y: float,
    min_side: float = MIN_PERTURBED_SIDE,
) -> Rect:
    """Scale about the centroid, shift, then translate minimally in-frame."""
    if d_shift_x == 0.0 and d_shift_y == 0.0 and d_area_x == 1.0 and d_area_y == 1.0:
        return box
    w = min(max(box.width * d_area_x, min_side), 1.0)
    h = min(max(box.height * d_area_y, min_side), 1.0)
    cx, cy = box.center
    cx += d_shift_x
    cy += d_shift_y
    x1, x2 = cx - w / 2.0, cx + w / 2.0
    y1, y2 = cy - h / 2.0, cy + h / 2.0
    # Anchor the violated edge and span the clamped size from it, so a
    # translated box can never leave [0, 1] by a rounding error.
    if x1 < 0.0:
        x1, x2 = 0.0, w
    elif x2 > 1.0:
        x1, x2 = max(0.0, 1.0 - w), 1.0
    if y1 < 0.0:
        y1, y2 = 0.0, h
    elif y2 > 1.0:
        y1, y2 = max(0.0, 1.0 - h), 1.0
    return Rect(x1, y1, x2, y2)


def perturb_box(box: Rect, spec: PerturbationSpec, draw_index: int) -> Rect:
    """Perturb a box; the identity spec returns the input box unchanged."""
    if spec.is_identity:
        return box
    return apply_perturbation(box, *perturbation_draws(spec, draw_index))


def select_cells(grid: GridLayout, box: Rect, mode: SelectionMode) -> list[str]:
    """Grid cells relevant to a query box.

    ANY_OVERLAP returns every cell with IoU(cell, box) > 0; ARGMAX_IOU returns
    the single best cell, ties broken by layout order. Any in-frame box
    overlaps at least one cell, so the result is never empty.
    """
    if mode is SelectionMode.ANY_OVERLAP:
        return [cid for cid, rect in grid.cells if iou(rect, box) > 0.0]
    if mode is SelectionMode.ARGMAX_IOU:
        best_id, best_iou = None, -1.0
        for cid, rect in grid.cells:
            value = iou(rect, box)
            if value > best_iou:
                best_id, best_iou = cid, value
        assert best_id is not None
        return [best_id]
    raise ValueError(f"unknown selection mode: {mode!r}")

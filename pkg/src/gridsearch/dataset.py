"""Annotation and image-manifest loading, validation, and corpus statistics.

An annotation file is JSON Lines: a header line declaring the coordinate
convention, then one record per region annotation. Pixel-coordinate files
need an image manifest (sizes) to normalize against.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .geometry import Rect

# Region-to-frame area ratios above WARN are suspicious; above FAIL, invalid.
AREA_WARN_THRESHOLD = 0.30
AREA_FAIL_THRESHOLD = 0.35
_AREA_FAIL_SLACK = 1e-9

HEATMAP_NX = 64
HEATMAP_NY = 36


class DatasetError(ValueError):
    """Malformed annotation or manifest input."""


@dataclass(frozen=True)
class ImageInfo:
    image_id: str
    width: int
    height: int
    uri: str

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise DatasetError(
                f"image '{self.image_id}': non-positive size {self.width}x{self.height}"
            )


@dataclass(frozen=True)
class Annotation:
    """A region annotation: a normalized box on an image with two phrasings."""

    id: str
    image_id: str
    short: str
    long: str
    box: Rect
    skippable: bool
    annotator_id: str | None = None


@dataclass
class Dataset:
    annotations: list[Annotation] = field(default_factory=list)
    images: dict[str, ImageInfo] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.annotations)

    def subset(self, skippable: bool) -> list[Annotation]:
        return [a for a in self.annotations if a.skippable == skippable]

    def get(self, annotation_id: str) -> Annotation:
        for ann in self.annotations:
            if ann.id == annotation_id:
                return ann
        raise KeyError(f"no annotation '{annotation_id}'")


def load_manifest(path: str) -> dict[str, ImageInfo]:
    """Read an image manifest (JSONL of image_id, width, height, uri)."""
    images: dict[str, ImageInfo] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                info = ImageInfo(
                    image_id=str(rec["image_id"]),
                    width=int(rec["width"]),
                    height=int(rec["height"]),
                    uri=str(rec["uri"]),
                )
            except KeyError as exc:
                raise DatasetError(f"{path}:{lineno}: missing field {exc}") from exc
            if info.image_id in images:
                raise DatasetError(f"{path}:{lineno}: duplicate image '{info.image_id}'")
            images[info.image_id] = info
    return images


def _normalize_box(
    rec: dict, coords: str, images: dict[str, ImageInfo] | None, where: str
) -> Rect:
    try:
        x1, y1 = float(rec["x1"]), float(rec["y1"])
        x2, y2 = float(rec["x2"]), float(rec["y2"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"{where}: bad box coordinates: {exc}") from exc
    if coords == "pixel":
        if images is None:
            raise DatasetError(f"{where}: pixel coordinates need an image manifest")
        image_id = str(rec["image_id"])
        if image_id not in images:
            raise DatasetError(f"{where}: image '{image_id}' not in manifest")
        info = images[image_id]
        x1, x2 = x1 / info.width, x2 / info.width
        y1, y2 = y1 / info.height, y2 / info.height
        # Pixel rounding may land a hair outside the frame; snap it back.
        x1, y1 = max(x1, 0.0), max(y1, 0.0)
        x2, y2 = min(x2, 1.0), min(y2, 1.0)
    try:
        return Rect(x1, y1, x2, y2)
    except ValueError as exc:
        raise DatasetError(f"{where}: {exc}") from exc


def load_annotations(
    path: str, images: dict[str, ImageInfo] | None = None
) -> Dataset:
    """Read an annotation file, normalizing and validating every record.

    The first line must be a header object with a "coords" key, either
    "normalized" or "pixel". Boxes covering more than 35% of the frame are
    rejected; more than 30% draws a warning.
    """
    annotations: list[Annotation] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
            coords = header["coords"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DatasetError(f"{path}:1: missing or invalid header: {exc}") from exc
        if coords not in ("normalized", "pixel"):
            raise DatasetError(f"{path}:1: unknown coords convention '{coords}'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{where}: invalid JSON: {exc}") from exc
            try:
                ann_id = str(rec["id"])
                image_id = str(rec["image_id"])
                short = str(rec["short"])
                long = str(rec["long"])
                skippable = bool(rec["skippable"])
            except KeyError as exc:
                raise DatasetError(f"{where}: missing field {exc}") from exc
            if not short or not long:
                raise DatasetError(f"{where}: empty description in '{ann_id}'")
            if ann_id in seen_ids:
                raise DatasetError(f"{where}: duplicate annotation id '{ann_id}'")
            seen_ids.add(ann_id)
            if images is not None and image_id not in images:
                raise DatasetError(f"{where}: image '{image_id}' not in manifest")
            box = _normalize_box(rec, coords, images, where)
            if box.area > AREA_FAIL_THRESHOLD + _AREA_FAIL_SLACK:
                raise DatasetError(
                    f"{where}: region covers {box.area:.1%} of the frame "
                    f"(limit {AREA_FAIL_THRESHOLD:.0%})"
                )
            if box.area > AREA_WARN_THRESHOLD:
                warnings.warn(
                    f"{where}: region covers {box.area:.1%} of the frame",
                    stacklevel=2,
                )
            annotations.append(
                Annotation(
                    id=ann_id,
                    image_id=image_id,
                    short=short,
                    long=long,
                    box=box,
                    skippable=skippable,
                    annotator_id=(
                        str(rec["annotator_id"]) if "annotator_id" in rec else None
                    ),
                )
            )
    return Dataset(annotations=annotations, images=dict(images or {}))


def save_annotations(dataset: Dataset, path: str) -> None:
    """Write annotations back out in normalized-coordinate form."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"coords": "normalized"}) + "\n")
        for ann in dataset.annotations:
            rec = {
                "id": ann.id,
                "image_id": ann.image_id,
                "short": ann.short,
                "long": ann.long,
                "x1": ann.box.x1,
                "y1": ann.box.y1,
                "x2": ann.box.x2,
                "y2": ann.box.y2,
                "skippable": ann.skippable,
            }
            if ann.annotator_id is not None:
                rec["annotator_id"] = ann.annotator_id
            fh.write(json.dumps(rec) + "\n")


def _mean_std(values: Iterable[float]) -> tuple[float, float]:
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return math.nan, math.nan
    return float(arr.mean()), float(arr.std())


@dataclass(frozen=True)
class SubsetStats:
    count: int
    short_chars_mean: float
    short_chars_std: float
    long_chars_mean: float
    long_chars_std: float
    area_pct_mean: float
    area_pct_std: float


def _subset_stats(anns: list[Annotation]) -> SubsetStats:
    sm, ss = _mean_std(len(a.short) for a in anns)
    lm, ls = _mean_std(len(a.long) for a in anns)
    am, as_ = _mean_std(100.0 * a.box.area for a in anns)
    return SubsetStats(
        count=len(anns),
        short_chars_mean=sm,
        short_chars_std=ss,
        long_chars_mean=lm,
        long_chars_std=ls,
        area_pct_mean=am,
        area_pct_std=as_,
    )


def occupancy_heatmap(
    annotations: Iterable[Annotation], nx: int = HEATMAP_NX, ny: int = HEATMAP_NY
) -> np.ndarray:
    """Per-bin box coverage over an nx-by-ny grid, shape (ny, nx).

    Each bin accumulates the exact fraction of its own area each box covers,
    so one box contributes box.area * nx * ny in total across all bins.
    """
    heat = np.zeros((ny, nx), dtype=np.float64)
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    for ann in annotations:
        b = ann.box
        # Fractional overlap of the box with each column / row of bins.
        col = np.clip(np.minimum(xs[1:], b.x2) - np.maximum(xs[:-1], b.x1), 0.0, None)
        row = np.clip(np.minimum(ys[1:], b.y2) - np.maximum(ys[:-1], b.y1), 0.0, None)
        heat += np.outer(row, col) * (nx * ny)
    return heat


@dataclass(frozen=True)
class DatasetSummary:
    total: int
    non_skippable: SubsetStats
    skippable: SubsetStats
    overall: SubsetStats
    heatmaps: dict[str, np.ndarray]

    def as_dict(self) -> dict:
        def rows(s: SubsetStats) -> dict:
            return {
                "count": s.count,
                "short_chars": {"mean": s.short_chars_mean, "std": s.short_chars_std},
                "long_chars": {"mean": s.long_chars_mean, "std": s.long_chars_std},
                "area_pct": {"mean": s.area_pct_mean, "std": s.area_pct_std},
            }

        some = next(iter(self.heatmaps.values()))
        return {
            "total": self.total,
            "non_skippable": rows(self.non_skippable),
            "skippable": rows(self.skippable),
            "overall": rows(self.overall),
            "heatmap": {
                "nx": int(some.shape[1]),
                "ny": int(some.shape[0]),
                "values": {
                    name: heat.tolist() for name, heat in self.heatmaps.items()
                },
            },
        }


def summarize(dataset: Dataset) -> DatasetSummary:
    """Corpus statistics: phrase lengths, region areas, and spatial occupancy.

    Heatmaps are produced per subset and overall.
    """
    if not dataset.annotations:
        raise DatasetError("no annotations to summarize")
    non_skip = dataset.subset(skippable=False)
    skip = dataset.subset(skippable=True)
    return DatasetSummary(
        total=len(dataset),
        non_skippable=_subset_stats(non_skip),
        skippable=_subset_stats(skip),
        overall=_subset_stats(dataset.annotations),
        heatmaps={
            "non_skippable": occupancy_heatmap(non_skip),
            "skippable": occupancy_heatmap(skip),
            "overall": occupancy_heatmap(dataset.annotations),
        },
    )

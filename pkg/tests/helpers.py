"""Shared fixture builders for the test suite."""

from __future__ import annotations

import json

import numpy as np

from gridsearch.dataset import ImageInfo
from gridsearch.embedder import SyntheticEmbedder
from gridsearch.geometry import FULL_FRAME, Rect
from gridsearch.store import (
    WHOLE_CELL_ID,
    EmbeddingStore,
    build_store,
    grid_for_region_set,
)


def make_manifest(n: int, prefix: str = "img") -> dict[str, ImageInfo]:
    return {
        f"{prefix}{i:04d}": ImageInfo(
            image_id=f"{prefix}{i:04d}",
            width=1280,
            height=720,
            uri=f"synthetic://{prefix}{i:04d}",
        )
        for i in range(n)
    }


def build_whole_store(embedder, manifest: dict[str, ImageInfo]) -> EmbeddingStore:
    """Whole-image store: one full-frame crop embedding per image."""
    keys = [(image_id, WHOLE_CELL_ID) for image_id in sorted(manifest)]
    vectors = np.stack(
        [
            embedder.embed_crop(manifest[image_id].uri, FULL_FRAME)
            for image_id, _ in keys
        ]
    )
    return build_store(vectors, keys, "whole")


def build_grid_store(
    embedder, manifest: dict[str, ImageInfo], region_set_id: str
) -> EmbeddingStore:
    """Grid store: one crop embedding per (image, layout cell)."""
    grid = grid_for_region_set(region_set_id)
    assert grid is not None
    keys = []
    rows = []
    for image_id in sorted(manifest):
        for cell_id, rect in grid.cells:
            keys.append((image_id, cell_id))
            rows.append(embedder.embed_crop(manifest[image_id].uri, rect))
    return build_store(np.stack(rows), keys, region_set_id)


def default_embedder(dim: int = 16) -> SyntheticEmbedder:
    return SyntheticEmbedder(dim=dim)


def write_annotation_file(
    path,
    records: list[dict],
    coords: str = "normalized",
) -> str:
    lines = [json.dumps({"coords": coords})]
    lines.extend(json.dumps(rec) for rec in records)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def write_manifest_file(path, manifest: dict[str, ImageInfo]) -> str:
    lines = [
        json.dumps(
            {
                "image_id": info.image_id,
                "width": info.width,
                "height": info.height,
                "uri": info.uri,
            }
        )
        for info in manifest.values()
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def annotation_record(
    ann_id: str,
    image_id: str,
    box: Rect,
    short: str | None = None,
    long: str | None = None,
    skippable: bool = False,
) -> dict:
    return {
        "id": ann_id,
        "image_id": image_id,
        "short": short or f"thing {ann_id}",
        "long": long or f"a distinctive thing called {ann_id} near the window",
        "x1": box.x1,
        "y1": box.y1,
        "x2": box.x2,
        "y2": box.y2,
        "skippable": skippable,
    }


def random_box(rng: np.random.Generator, max_area: float = 0.25) -> Rect:
    """A uniform random in-frame box with area capped below the error limit."""
    while True:
        w = rng.uniform(0.02, 0.6)
        h = rng.uniform(0.02, 0.6)
        if w * h > max_area:
            continue
        x1 = rng.uniform(0.0, 1.0 - w)
        y1 = rng.uniform(0.0, 1.0 - h)
        return Rect(x1, y1, x1 + w, y1 + h)

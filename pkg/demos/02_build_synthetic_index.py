"""Build embedding stores for a synthetic frame collection, end to end.

The same flow the `gridsearch ingest` command runs: enumerate (image, cell)
pairs in a fixed scan order, embed each cell crop, and persist one store per
region set. Stores are float32 row matrices with a JSON sidecar, so any tool
can regenerate or audit them.
"""

import tempfile
from pathlib import Path

import numpy as np

from gridsearch.dataset import ImageInfo
from gridsearch.embedder import SyntheticEmbedder
from gridsearch.geometry import FULL_FRAME
from gridsearch.store import (
    grid_for_region_set,
    ingest,
    load_store_dir,
    store_path,
    write_raw_vectors,
)


def synthetic_manifest(n: int) -> dict[str, ImageInfo]:
    return {
        f"frame{i:04d}": ImageInfo(
            image_id=f"frame{i:04d}",
            width=1280,
            height=720,
            uri=f"synthetic://demo/frame{i:04d}",
        )
        for i in range(n)
    }


def embed_region_set(embedder, manifest, region_set_id: str) -> np.ndarray:
    """Embed every (image, cell) crop in the store's scan order."""
    grid = grid_for_region_set(region_set_id)
    rects = [FULL_FRAME] if grid is None else [rect for _, rect in grid.cells]
    rows = []
    for image_id in sorted(manifest):
        uri = manifest[image_id].uri
        rows.extend(embedder.embed_crop(uri, rect) for rect in rects)
    return np.stack(rows)


def main() -> None:
    manifest = synthetic_manifest(40)
    embedder = SyntheticEmbedder(dim=32)
    print(f"manifest: {len(manifest)} frames, embedder dim {embedder.dim}")

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        for region_set_id in ("whole", "static5", "static9", "static9@e=0.1"):
            vectors = embed_region_set(embedder, manifest, region_set_id)
            raw = out / f"{region_set_id}.f32"
            write_raw_vectors(str(raw), vectors)
            store = ingest(manifest, str(raw), region_set_id)
            store.save(store_path(str(out), region_set_id))
            print(
                f"  built '{region_set_id}': {len(store.keys)} rows "
                f"({len(store.image_ids)} images x "
                f"{len(store.keys) // len(store.image_ids)} cells)"
            )

        stores = load_store_dir(str(out))
        print(f"reloaded {len(stores)} stores from {out}")
        probe = stores["static9"]
        row = probe.row("frame0007", "r2c3")
        print(
            "  spot check: frame0007/r2c3 is unit length "
            f"(|v| = {float(np.linalg.norm(row.astype(np.float64))):.6f})"
        )


if __name__ == "__main__":
    main()

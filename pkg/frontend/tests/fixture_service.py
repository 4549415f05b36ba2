"""Throwaway retrieval service over synthetic stores, spawned by UI tests.

Prints "PORT <n>" once a free port is chosen, then serves until killed.
"""

import socket

import numpy as np
import uvicorn

from gridsearch.dataset import ImageInfo
from gridsearch.embedder import SyntheticEmbedder
from gridsearch.geometry import FULL_FRAME
from gridsearch.service import create_app
from gridsearch.store import build_store, grid_for_region_set

REGION_SETS = (
    "whole",
    "static5",
    "static9",
    "static5@e=0.1",
    "static9@e=0.1",
    "static5@e=0.2",
    "static9@e=0.2",
)


def main() -> None:
    manifest = {
        f"img{i:04d}": ImageInfo(
            image_id=f"img{i:04d}",
            width=1280,
            height=720,
            uri=f"synthetic://ui-fixture/img{i:04d}",
        )
        for i in range(120)
    }
    embedder = SyntheticEmbedder(dim=32)
    stores = {}
    for region_set_id in REGION_SETS:
        grid = grid_for_region_set(region_set_id)
        rects = [("whole", FULL_FRAME)] if grid is None else list(grid.cells)
        keys, rows = [], []
        for image_id in sorted(manifest):
            for cell_id, rect in rects:
                keys.append((image_id, cell_id))
                rows.append(embedder.embed_crop(manifest[image_id].uri, rect))
        stores[region_set_id] = build_store(np.stack(rows), keys, region_set_id)

    app = create_app(
        stores,
        embedder,
        manifest=manifest,
        reports={"ui-fixture": {"note": "synthetic fixture for UI tests"}},
    )
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    print(f"PORT {port}", flush=True)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


if __name__ == "__main__":
    main()

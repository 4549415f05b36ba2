"""Compare all six search models on scenes with spatially placed content.

The scene embedder composes crop vectors from the tokens a crop overlaps, so
region-aware models can separate "the cat in the top-left" from every other
image that merely contains a cat somewhere. Whole-image search cannot.
"""

import numpy as np

from gridsearch.dataset import ImageInfo
from gridsearch.embedder import Placement, SceneEmbedder
from gridsearch.geometry import FULL_FRAME, GridKind, Rect, build_grid
from gridsearch.retrieval import Model, QuerySpec, run_query
from gridsearch.store import build_store, grid_for_region_set

TOKENS = ["cat", "dog", "lamp", "plant", "mug", "clock", "book", "shoe"]


def build_scenes(rng: np.random.Generator, n_images: int):
    """Each image places 3 tokens in 3 distinct cells of the 3x3 grid."""
    grid9 = build_grid(GridKind.STATIC9)
    manifest = {}
    scenes = {}
    for i in range(n_images):
        image_id = f"frame{i:03d}"
        uri = f"synthetic://scenes/{image_id}"
        manifest[image_id] = ImageInfo(
            image_id=image_id, width=1280, height=720, uri=uri
        )
        cells = rng.choice(9, size=3, replace=False)
        tokens = rng.choice(len(TOKENS), size=3, replace=False)
        placements = []
        for c, t in zip(cells, tokens):
            _, rect = grid9.cells[int(c)]
            pad_w, pad_h = rect.width * 0.15, rect.height * 0.15
            placements.append(
                Placement(
                    token=TOKENS[int(t)],
                    rect=Rect(
                        rect.x1 + pad_w,
                        rect.y1 + pad_h,
                        rect.x2 - pad_w,
                        rect.y2 - pad_h,
                    ),
                )
            )
        scenes[uri] = placements
    return manifest, scenes


def build_stores(embedder, manifest):
    stores = {}
    for region_set_id in ("whole", "static5", "static9"):
        grid = grid_for_region_set(region_set_id)
        rects = (
            [("whole", FULL_FRAME)] if grid is None else list(grid.cells)
        )
        keys, rows = [], []
        for image_id in sorted(manifest):
            for cell_id, rect in rects:
                keys.append((image_id, cell_id))
                rows.append(embedder.embed_crop(manifest[image_id].uri, rect))
        stores[region_set_id] = build_store(np.stack(rows), keys, region_set_id)
    return stores


def target_rank(model, stores, embedder, manifest, target_id, token, box):
    spec = QuerySpec(
        text=token,
        model=model,
        box=None if model is Model.WHOLE_IMAGE else box,
    )
    ranking, selected = run_query(spec, stores, embedder, manifest=manifest)
    return ranking, selected, ranking.rank_of(target_id)


def main() -> None:
    rng = np.random.default_rng(31)
    manifest, scenes = build_scenes(rng, n_images=48)
    embedder = SceneEmbedder(scenes, dim=48)
    stores = build_stores(embedder, manifest)

    # One query per image: its first placed token, boxed at its placement.
    queries = [
        (mid, scenes[info.uri][0].token, scenes[info.uri][0].rect)
        for mid, info in sorted(manifest.items())
    ]
    print(f"{len(queries)} queries over {len(manifest)} images")
    print()
    print("Mean rank of the intended image (lower is better):")
    ranks_by_model = {}
    for model in Model:
        ranks = [
            target_rank(model, stores, embedder, manifest, mid, token, box)[2]
            for mid, token, box in queries
        ]
        ranks_by_model[model] = ranks
        print(f"  {model.value:>18}: {sum(ranks) / len(ranks):6.2f}")

    # Zoom in on the query whole-image search handles worst.
    worst = max(range(len(queries)), key=lambda i: ranks_by_model[Model.WHOLE_IMAGE][i])
    target_id, token, box = queries[worst]
    others = sum(
        1
        for info in manifest.values()
        if any(p.token == token for p in scenes[info.uri])
    )
    pretty_box = ", ".join(f"{v:.3f}" for v in box.as_tuple())
    print()
    print(f"Hardest whole-image query: '{token}', target {target_id}")
    print(f"  box ({pretty_box}); {others} of {len(manifest)} images have a '{token}'")
    print(f"  {'model':>18}  rank   top-3")
    for model in Model:
        ranking, selected, rank = target_rank(
            model, stores, embedder, manifest, target_id, token, box
        )
        top3 = ", ".join(
            f"{image_id}:{score:.3f}" for image_id, score in ranking.top(3)
        )
        note = f"  (cells {selected})" if selected else ""
        print(f"  {model.value:>18}  {rank:^4d}   {top3}{note}")
    print()
    print("Region-aware models only keep images whose matching content sits")
    print("in the drawn region; appended location words change the query")
    print("text but cannot constrain where a match occurs.")


if __name__ == "__main__":
    main()

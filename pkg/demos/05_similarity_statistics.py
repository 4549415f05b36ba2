"""Statistical comparison of whole-image vs best-cell query similarity.

For every annotation this pairs the target's whole-image cosine against its
best selected-cell cosine, then summarizes the paired differences with a
Pearson correlation and an exact Wilcoxon signed-rank test. Also prints the
grid/box overlap report that motivates cell enlargement.
"""

import numpy as np

from gridsearch.dataset import Annotation, ImageInfo
from gridsearch.embedder import Placement, SceneEmbedder
from gridsearch.evaluation import mean_iou_report, similarity_delta_analysis
from gridsearch.geometry import FULL_FRAME, GridKind, Rect, build_grid
from gridsearch.stats import pearson, wilcoxon_signed_rank
from gridsearch.store import build_store, grid_for_region_set


def build_world(rng: np.random.Generator, n_images: int):
    grid9 = build_grid(GridKind.STATIC9)
    tokens = [f"thing{k:02d}" for k in range(10)]
    manifest, scenes, annotations = {}, {}, []
    for i in range(n_images):
        image_id = f"frame{i:03d}"
        uri = f"synthetic://stats/{image_id}"
        manifest[image_id] = ImageInfo(
            image_id=image_id, width=1280, height=720, uri=uri
        )
        cells = rng.choice(9, size=4, replace=False)
        picks = rng.choice(len(tokens), size=4, replace=False)
        placements = []
        for c, t in zip(cells, picks):
            _, rect = grid9.cells[int(c)]
            pad_w, pad_h = rect.width * 0.2, rect.height * 0.2
            placements.append(
                Placement(
                    token=tokens[int(t)],
                    rect=Rect(
                        rect.x1 + pad_w,
                        rect.y1 + pad_h,
                        rect.x2 - pad_w,
                        rect.y2 - pad_h,
                    ),
                )
            )
        scenes[uri] = placements
        annotations.append(
            Annotation(
                id=f"ann{i:03d}",
                image_id=image_id,
                short=placements[0].token,
                long=placements[0].token,
                box=placements[0].rect,
                skippable=False,
            )
        )
    return manifest, scenes, annotations


def main() -> None:
    rng = np.random.default_rng(11)
    manifest, scenes, annotations = build_world(rng, n_images=80)
    embedder = SceneEmbedder(scenes, dim=48)

    stores = {}
    for region_set_id in ("whole", "static9"):
        grid = grid_for_region_set(region_set_id)
        rects = [("whole", FULL_FRAME)] if grid is None else list(grid.cells)
        keys, rows = [], []
        for image_id in sorted(manifest):
            for cell_id, rect in rects:
                keys.append((image_id, cell_id))
                rows.append(embedder.embed_crop(manifest[image_id].uri, rect))
        stores[region_set_id] = build_store(np.stack(rows), keys, region_set_id)

    print("== Whole-image vs best-cell similarity to the query ==")
    grid9 = build_grid(GridKind.STATIC9)
    result = similarity_delta_analysis(
        annotations, stores["whole"], stores["static9"], grid9, embedder
    )
    print(f"  n = {result.n} annotations")
    print(f"  mean cosine, whole image: {result.mean_s_whole:.4f}")
    print(f"  mean cosine, best cell:   {result.mean_s_part:.4f}")
    print(
        "  Wilcoxon signed-rank: W = "
        f"{result.wilcoxon.statistic:.1f}, p = {result.wilcoxon.p_value:.2e} "
        f"({result.wilcoxon.method})"
    )
    print(f"  Pearson(score delta, rank delta): {result.pearson_delta:+.4f}")

    print()
    print("== How well do static cells cover the drawn boxes? ==")
    report = mean_iou_report(
        annotations,
        {kind.value: build_grid(kind) for kind in GridKind},
    )
    for name, value in report.items():
        label = "mean box area" if name == "whole" else "mean best-cell IoU"
        print(f"  {name:>10}: {value:.4f} ({label})")

    print()
    print("== The underlying tests, on a transparent toy pair ==")
    before = np.array([72.0, 65, 81, 79, 58, 66, 90, 74, 68, 77])
    after = np.array([75.0, 61, 87, 71, 60, 77, 81, 87, 67, 72])
    w = wilcoxon_signed_rank(before, after)
    print(f"  toy Wilcoxon: W = {w.statistic:.1f}, p = {w.p_value:.6f} ({w.method})")
    print(f"  toy Pearson:  r = {pearson(before, after):.4f}")


if __name__ == "__main__":
    main()

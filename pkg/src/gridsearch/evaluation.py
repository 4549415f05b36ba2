"""Evaluation harness: per-annotation rank measurement, recall/mean-rank
aggregation, perturbation-robustness sweeps, and the similarity-delta and
IoU analyses.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .dataset import Annotation
from .embedder import quantize_box
from .geometry import (
    GridLayout,
    PerturbationSpec,
    Rect,
    SelectionMode,
    build_grid,
    iou,
    normalize_sigma_area,
    perturb_box,
    select_cells,
)
from .retrieval import (
    Model,
    Ranking,
    SuffixLength,
    append_suffix,
    score_grid,
    score_target_substitution,
    score_theoretical,
    score_whole,
)
from .stats import WilcoxonResult, pearson, wilcoxon_signed_rank
from .store import (
    WHOLE_CELL_ID,
    WHOLE_REGION_SET,
    EmbeddingStore,
    format_region_set_id,
    grid_for_region_set,
)

RANK_KS = (1, 10, 100, 1000)

CSV_COLUMNS = (
    "model",
    "length",
    "subset",
    "selection",
    "enlargement",
    "sigma_s",
    "sigma_a",
    "seed_count",
    "R1",
    "R10",
    "R100",
    "R1000",
    "MNR",
    "N",
)


class Subset(str, Enum):
    SKIPPABLE = "skippable"
    NON_SKIPPABLE = "non-skippable"
    ALL = "all"


def draw_index(annotation_id: str) -> int:
    """Stable per-annotation perturbation stream key.

    Derived from the annotation id alone, so every model, grid, and
    enlargement sees the same perturbed box for a given (annotation, seed).
    """
    digest = hashlib.sha256(annotation_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class EvalCell:
    """One evaluation configuration: a point in the sweep grid."""

    model: Model
    query_length: SuffixLength = SuffixLength.LONG
    subset: Subset = Subset.ALL
    selection_mode: SelectionMode = SelectionMode.ANY_OVERLAP
    enlargement: float = 0.0
    sigma_shift: float = 0.0
    sigma_area: float = 0.0
    seeds: tuple[int, ...] = (0,)
    # Select cells on the un-enlarged layout while scoring enlarged rows.
    select_on_base: bool = False

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.sigma_shift < 0 or self.sigma_area < 0:
            raise ValueError("perturbation std-devs must be non-negative")

    @property
    def is_perturbed(self) -> bool:
        return self.sigma_shift != 0.0 or self.sigma_area != 0.0

    def as_dict(self) -> dict:
        return {
            "model": self.model.value,
            "length": self.query_length.value,
            "subset": self.subset.value,
            "selection": self.selection_mode.value,
            "enlargement": self.enlargement,
            "sigma_shift": self.sigma_shift,
            "sigma_area": self.sigma_area,
            "seeds": list(self.seeds),
            "select_on_base": self.select_on_base,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class EvalReport:
    """Aggregated ranks for one EvalCell."""

    cell: EvalCell
    ranks: dict[str, list[tuple[int, int]]]
    r_at: dict[int, float]
    mnr: float
    n_samples: int
    n_annotations: int
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "cell": self.cell.as_dict(),
            "config_hash": self.cell.config_hash(),
            "r_at": {str(k): v for k, v in self.r_at.items()},
            "mnr": self.mnr,
            "n_samples": self.n_samples,
            "n_annotations": self.n_annotations,
            "ranks": {
                ann_id: [[seed, rank] for seed, rank in pairs]
                for ann_id, pairs in self.ranks.items()
            },
            "metadata": self.metadata,
        }

    def csv_row(self) -> str:
        cell = self.cell
        values = [
            cell.model.value,
            cell.query_length.value,
            cell.subset.value,
            cell.selection_mode.value,
            f"{cell.enlargement:g}",
            f"{cell.sigma_shift:g}",
            f"{cell.sigma_area:g}",
            str(len(cell.seeds)),
            *(repr(self.r_at[k]) for k in RANK_KS),
            repr(self.mnr),
            str(self.n_samples),
        ]
        return ",".join(values)


def recall_at(ranks: Sequence[int], k: int) -> float:
    """Percentage of ranks at or under k."""
    if not ranks:
        raise ValueError("no ranks")
    return 100.0 * sum(1 for r in ranks if r <= k) / len(ranks)


def mean_rank(ranks: Sequence[int]) -> float:
    if not ranks:
        raise ValueError("no ranks")
    return float(np.mean(np.asarray(ranks, dtype=np.float64)))


def filter_subset(annotations: Iterable[Annotation], subset: Subset) -> list[Annotation]:
    if subset is Subset.ALL:
        return list(annotations)
    want = subset is Subset.SKIPPABLE
    return [a for a in annotations if a.skippable == want]


def _aggregate(
    ranks: dict[str, list[tuple[int, int]]], per_annotation: bool
) -> tuple[dict[int, float], float, int]:
    if per_annotation:
        r_at = {
            k: float(
                np.mean(
                    [recall_at([r for _, r in pairs], k) for pairs in ranks.values()]
                )
            )
            for k in RANK_KS
        }
        mnr = float(np.mean([mean_rank([r for _, r in pairs]) for pairs in ranks.values()]))
        n = sum(len(pairs) for pairs in ranks.values())
        return r_at, mnr, n
    pooled = [r for pairs in ranks.values() for _, r in pairs]
    return (
        {k: recall_at(pooled, k) for k in RANK_KS},
        mean_rank(pooled),
        len(pooled),
    )


def run_eval(
    annotations: Iterable[Annotation],
    cell: EvalCell,
    stores: dict[str, EmbeddingStore],
    embedder,
    manifest: dict | None = None,
    per_annotation: bool = False,
) -> EvalReport:
    """Measure the target image's rank for every annotation in a cell's subset.

    With perturbation active, each (annotation, seed) pair contributes one
    sample; the identity perturbation makes all seeds coincide. Aggregation
    pools samples by default; ``per_annotation`` averages per-annotation
    metrics instead.
    """
    subset_anns = filter_subset(annotations, cell.subset)
    if not subset_anns:
        raise ValueError(f"no annotations in subset '{cell.subset.value}'")

    model = cell.model
    grid: GridLayout | None = None
    selection_grid: GridLayout | None = None
    grid_store: EmbeddingStore | None = None
    whole_store: EmbeddingStore | None = None
    region_set_ids: list[str] = []
    if model in (Model.STATIC5, Model.STATIC9):
        base = "static5" if model is Model.STATIC5 else "static9"
        region_set_id = format_region_set_id(base, cell.enlargement)
        if region_set_id not in stores:
            raise KeyError(f"no '{region_set_id}' store loaded")
        grid_store = stores[region_set_id]
        grid = grid_for_region_set(region_set_id)
        if cell.select_on_base and cell.enlargement:
            selection_grid = build_grid(grid.kind)
        region_set_ids.append(region_set_id)
    elif model is Model.THEORETICAL:
        if manifest is None:
            raise ValueError("theoretical model requires an image manifest")
    else:
        if WHOLE_REGION_SET not in stores:
            raise KeyError(f"no '{WHOLE_REGION_SET}' store loaded")
        whole_store = stores[WHOLE_REGION_SET]
        region_set_ids.append(WHOLE_REGION_SET)

    # Pass 1: perturb boxes and assemble query texts for one batched embed.
    tasks: list[tuple[Annotation, int, Rect, str]] = []
    spec_by_seed = {
        seed: PerturbationSpec(cell.sigma_shift, cell.sigma_area, seed)
        for seed in cell.seeds
    }
    for ann in subset_anns:
        base_text = (
            ann.short if cell.query_length is SuffixLength.SHORT else ann.long
        )
        stream = draw_index(ann.id)
        for seed in cell.seeds:
            box = perturb_box(ann.box, spec_by_seed[seed], stream)
            if model is Model.APPEND_SHORT:
                text = append_suffix(base_text, box, SuffixLength.SHORT)
            elif model is Model.APPEND_LONG:
                text = append_suffix(base_text, box, SuffixLength.LONG)
            else:
                text = base_text
            tasks.append((ann, seed, box, text))

    unique_texts = list(dict.fromkeys(text for _, _, _, text in tasks))
    vectors = embedder.embed_text(unique_texts)
    vector_of = dict(zip(unique_texts, vectors))

    # Pass 2: rank once per distinct (query vector, cell subset / crop box).
    ranks: dict[str, list[tuple[int, int]]] = {ann.id: [] for ann in subset_anns}
    cache: dict[tuple, Ranking] = {}
    for ann, seed, box, text in tasks:
        if model in (Model.STATIC5, Model.STATIC9):
            assert grid is not None and grid_store is not None
            selected = tuple(
                select_cells(selection_grid or grid, box, cell.selection_mode)
            )
            key = ("grid", selected, text)
            if key not in cache:
                cache[key] = score_grid(
                    grid_store,
                    grid,
                    box,
                    cell.selection_mode,
                    vector_of[text],
                    selection_grid=selection_grid,
                )
        elif model is Model.THEORETICAL:
            key = ("crop", quantize_box(box), text)
            if key not in cache:
                cache[key] = score_theoretical(
                    manifest, box, vector_of[text], embedder
                )
        else:
            key = ("whole", text)
            if key not in cache:
                assert whole_store is not None
                cache[key] = score_whole(whole_store, vector_of[text])
        ranking = cache[key]
        try:
            rank = ranking.rank_of(ann.image_id)
        except KeyError:
            raise KeyError(
                f"annotation '{ann.id}' targets unknown image '{ann.image_id}'"
            ) from None
        ranks[ann.id].append((seed, rank))

    r_at, mnr, n_samples = _aggregate(ranks, per_annotation)
    return EvalReport(
        cell=cell,
        ranks=ranks,
        r_at=r_at,
        mnr=mnr,
        n_samples=n_samples,
        n_annotations=len(subset_anns),
        metadata={
            "model_id": getattr(embedder, "model_id", None),
            "stores": region_set_ids,
            "per_annotation": per_annotation,
            "config_hash": cell.config_hash(),
        },
    )


def sweep(
    annotations: Iterable[Annotation],
    models: Sequence[Model],
    sigma_pairs: Sequence[tuple[float, float]],
    enlargements: Sequence[float],
    seeds: Sequence[int],
    stores: dict[str, EmbeddingStore],
    embedder,
    query_length: SuffixLength = SuffixLength.LONG,
    subset: Subset = Subset.ALL,
    selection_mode: SelectionMode = SelectionMode.ANY_OVERLAP,
    manifest: dict | None = None,
    per_annotation: bool = False,
    select_on_base: bool = False,
    progress: Callable[[EvalCell], None] | None = None,
) -> list[EvalReport]:
    """Evaluate the Cartesian product models x sigma_pairs x enlargements.

    sigma_area values above 1 are read as percentages. Perturbation draws
    depend only on (annotation, seed), so every configuration in the sweep
    sees identical perturbed boxes.
    """
    annotations = list(annotations)
    reports = []
    for model in models:
        for sigma_shift, sigma_area in sigma_pairs:
            for enlargement in enlargements:
                cell = EvalCell(
                    model=model,
                    query_length=query_length,
                    subset=subset,
                    selection_mode=selection_mode,
                    enlargement=enlargement,
                    sigma_shift=sigma_shift,
                    sigma_area=normalize_sigma_area(sigma_area),
                    seeds=tuple(seeds),
                    select_on_base=select_on_base,
                )
                if progress is not None:
                    progress(cell)
                reports.append(
                    run_eval(
                        annotations,
                        cell,
                        stores,
                        embedder,
                        manifest=manifest,
                        per_annotation=per_annotation,
                    )
                )
    return reports


def sweep_csv(reports: Sequence[EvalReport]) -> str:
    """Long-format CSV, one row per evaluated cell."""
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(report.csv_row() for report in reports)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SimilarityDeltaResult:
    """Per-set aggregates of the whole-image vs best-cell score comparison."""

    mean_s_whole: float
    mean_s_part: float
    pearson_delta: float
    wilcoxon: WilcoxonResult
    n: int


def similarity_delta_analysis(
    annotations: Iterable[Annotation],
    store_whole: EmbeddingStore,
    store_grid: EmbeddingStore,
    grid: GridLayout,
    embedder,
    query_length: SuffixLength = SuffixLength.LONG,
) -> SimilarityDeltaResult:
    """Compare whole-image and best-IoU-cell target scores and ranks.

    s_whole is the target's whole-image cosine; s_part its best-IoU cell
    cosine; r_whole the rank under whole-image scoring; r_part the rank when
    only the target is scored from that cell (target substitution). Reports
    both means, the Pearson correlation of (s_part - s_whole) against
    (r_part - r_whole), and a Wilcoxon signed-rank test of the paired scores.
    """
    annotations = list(annotations)
    if not annotations:
        raise ValueError("no annotations")
    texts = [
        a.short if query_length is SuffixLength.SHORT else a.long
        for a in annotations
    ]
    unique_texts = list(dict.fromkeys(texts))
    vectors = embedder.embed_text(unique_texts)
    vector_of = dict(zip(unique_texts, vectors))

    s_whole = np.empty(len(annotations))
    s_part = np.empty(len(annotations))
    delta_rank = np.empty(len(annotations))
    for i, (ann, text) in enumerate(zip(annotations, texts)):
        f_t = vector_of[text]
        whole_ranking = score_whole(store_whole, f_t)
        sub_ranking = score_target_substitution(
            store_whole, store_grid, grid, ann.box, ann.image_id, f_t
        )
        (cell_id,) = select_cells(grid, ann.box, SelectionMode.ARGMAX_IOU)
        s_whole[i] = float(
            np.asarray(store_whole.row(ann.image_id, WHOLE_CELL_ID), np.float64)
            @ f_t
        )
        s_part[i] = float(
            np.asarray(store_grid.row(ann.image_id, cell_id), np.float64) @ f_t
        )
        delta_rank[i] = sub_ranking.rank_of(ann.image_id) - whole_ranking.rank_of(
            ann.image_id
        )
    delta_score = s_part - s_whole
    return SimilarityDeltaResult(
        mean_s_whole=float(s_whole.mean()),
        mean_s_part=float(s_part.mean()),
        pearson_delta=pearson(delta_score, delta_rank),
        wilcoxon=wilcoxon_signed_rank(s_part, s_whole),
        n=len(annotations),
    )


def mean_iou_report(
    annotations: Iterable[Annotation], grids: dict[str, GridLayout]
) -> dict[str, float]:
    """Mean best-cell IoU per grid, plus the whole-frame baseline.

    The whole-frame IoU of a box equals its area, since the union with the
    unit frame is the frame itself.
    """
    annotations = list(annotations)
    if not annotations:
        raise ValueError("no annotations")
    result: dict[str, float] = {}
    for name, grid in grids.items():
        best = [
            max(iou(rect, ann.box) for _, rect in grid.cells)
            for ann in annotations
        ]
        result[name] = float(np.mean(best))
    result["whole"] = float(np.mean([ann.box.area for ann in annotations]))
    return result

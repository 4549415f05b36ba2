"""Region-constrained text-to-image retrieval over static sub-region grids.

The package splits into geometry (grids, IoU, perturbation), dataset
(annotations and manifests), store (persistent embedding matrices),
embedder (vector providers), retrieval (the search models), evaluation
(metrics, sweeps, statistics), and the service/cli front ends.
"""

from .dataset import (
    Annotation,
    Dataset,
    DatasetError,
    DatasetSummary,
    ImageInfo,
    load_annotations,
    load_manifest,
    occupancy_heatmap,
    save_annotations,
    summarize,
)
from .embedder import (
    CropCache,
    DimensionMismatch,
    EmbedderError,
    HttpEmbedder,
    Placement,
    SceneEmbedder,
    SyntheticEmbedder,
    TransportError,
)
from .evaluation import (
    EvalCell,
    EvalReport,
    SimilarityDeltaResult,
    Subset,
    draw_index,
    mean_iou_report,
    mean_rank,
    recall_at,
    run_eval,
    similarity_delta_analysis,
    sweep,
    sweep_csv,
)
from .geometry import (
    FULL_FRAME,
    GridKind,
    GridLayout,
    PerturbationSpec,
    Rect,
    SelectionMode,
    apply_perturbation,
    build_grid,
    enlarge_grid,
    iou,
    max_enlargement,
    normalize_sigma_area,
    perturb_box,
    perturbation_draws,
    select_cells,
)
from .retrieval import (
    Model,
    QuerySpec,
    Ranking,
    SuffixLength,
    append_suffix,
    run_query,
    score_grid,
    score_target_substitution,
    score_theoretical,
    score_whole,
    suffix_for_box,
)
from .stats import (
    StatisticsError,
    WilcoxonResult,
    pearson,
    wilcoxon_signed_rank,
)
from .store import (
    EmbeddingStore,
    StoreError,
    build_store,
    format_region_set_id,
    grid_for_region_set,
    ingest,
    load_store_dir,
    parse_region_set_id,
    read_raw_vectors,
    write_raw_vectors,
)

__version__ = "0.1.0"

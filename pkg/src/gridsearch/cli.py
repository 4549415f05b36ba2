"""Command line entry points.

Subcommands: ingest, validate, query, eval, sweep, serve, stats. All
successful output is machine-readable (JSON or CSV) on stdout; failures
exit non-zero with a single JSON error line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .dataset import load_annotations, load_manifest, summarize
from .evaluation import (
    EvalCell,
    Subset,
    run_eval,
    sweep,
    sweep_csv,
)
from .geometry import Rect, SelectionMode, normalize_sigma_area
from .retrieval import Model, SuffixLength
from .service import create_app, execute_query, parse_query_request
from .store import EmbeddingStore, ingest, load_store_dir, store_path


def _make_embedder(name: str, dim: int, model_id: str | None = None):
    from .embedder import HttpEmbedder, SyntheticEmbedder

    if name == "synthetic":
        return SyntheticEmbedder(dim=dim, model_id=model_id or "synthetic")
    if name == "http":
        return HttpEmbedder.from_env(model_id or "default", dim)
    raise ValueError(f"unknown embedder '{name}' (use synthetic or http)")


def _add_embedder_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--embedder", default="synthetic", help="synthetic or http")
    sub.add_argument("--dim", type=int, default=64, help="embedding dimensionality")
    sub.add_argument("--model-id", default=None, help="embedder model identifier")


def _parse_box(text: str) -> Rect:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"box must be x1,y1,x2,y2, got '{text}'")
    x1, y1, x2, y2 = (float(p) for p in parts)
    return Rect(x1, y1, x2, y2)


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p != "")


def _load_stores(directory: str) -> dict[str, EmbeddingStore]:
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"store directory '{directory}' does not exist")
    stores = load_store_dir(directory)
    if not stores:
        raise FileNotFoundError(f"no stores found in '{directory}'")
    return stores


def _cmd_ingest(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    store = ingest(manifest, args.vectors, args.region_set)
    os.makedirs(args.out, exist_ok=True)
    path = store_path(args.out, store.region_set_id)
    store.save(path)
    print(
        json.dumps(
            {
                "path": path,
                "region_set_id": store.region_set_id,
                "rows": store.n_rows,
                "dim": store.dim,
                "images": len(store.image_ids),
            }
        )
    )
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest) if args.manifest else None
    dataset = load_annotations(args.annotations, manifest)
    images = dataset.images or {a.image_id for a in dataset.annotations}
    print(
        json.dumps(
            {
                "annotations": len(dataset),
                "skippable": len(dataset.subset(skippable=True)),
                "non_skippable": len(dataset.subset(skippable=False)),
                "images": len(images),
            }
        )
    )
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    stores = _load_stores(args.stores)
    manifest = load_manifest(args.manifest) if args.manifest else None
    dim = next(iter(stores.values())).dim
    embedder = _make_embedder(args.embedder, dim, args.model_id)
    body = {
        "text": args.text,
        "model": args.model,
        "box": list(_parse_box(args.box).as_tuple()) if args.box else None,
        "selection_mode": args.selection,
        "enlargement": args.enlargement,
        "top_k": args.top_k,
    }
    spec, top_k = parse_query_request(body)
    payload = execute_query(spec, top_k, stores, embedder, manifest)
    print(json.dumps(payload))
    return 0


def _eval_cell_from_args(args: argparse.Namespace) -> EvalCell:
    return EvalCell(
        model=Model.parse(args.model),
        query_length=SuffixLength(args.length),
        subset=Subset(args.subset),
        selection_mode=SelectionMode(args.selection),
        enlargement=args.enlargement,
        sigma_shift=args.sigma_shift,
        sigma_area=normalize_sigma_area(args.sigma_area),
        seeds=_parse_seeds(args.seeds),
        select_on_base=args.select_on_base,
    )


def _cmd_eval(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest) if args.manifest else None
    dataset = load_annotations(args.annotations, manifest)
    stores = _load_stores(args.stores)
    dim = next(iter(stores.values())).dim
    embedder = _make_embedder(args.embedder, dim, args.model_id)
    cell = _eval_cell_from_args(args)
    report = run_eval(
        dataset.annotations,
        cell,
        stores,
        embedder,
        manifest=manifest,
        per_annotation=args.per_annotation,
    )
    if args.format == "csv":
        print(sweep_csv([report]), end="")
    else:
        print(json.dumps(report.as_dict()))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    with open(args.config, "rb") as fh:
        config = tomllib.load(fh)
    if "sweep" in config:
        config = config["sweep"]
    manifest = (
        load_manifest(config["manifest"]) if config.get("manifest") else None
    )
    dataset = load_annotations(config["annotations"], manifest)
    stores = _load_stores(config["stores"])
    dim = next(iter(stores.values())).dim
    embedder = _make_embedder(
        config.get("embedder", "synthetic"), dim, config.get("model_id")
    )
    reports = sweep(
        dataset.annotations,
        [Model.parse(m) for m in config["models"]],
        [(float(a), float(b)) for a, b in config["sigma_pairs"]],
        [float(e) for e in config.get("enlargements", [0.0])],
        [int(s) for s in config.get("seeds", [0])],
        stores,
        embedder,
        query_length=SuffixLength(config.get("length", "long")),
        subset=Subset(config.get("subset", "all")),
        selection_mode=SelectionMode(config.get("selection", "any-overlap")),
        manifest=manifest,
        per_annotation=bool(config.get("per_annotation", False)),
        select_on_base=bool(config.get("select_on_base", False)),
        progress=lambda cell: print(
            json.dumps({"running": cell.as_dict()}), file=sys.stderr
        ),
    )
    csv_text = sweep_csv(reports)
    out_csv = args.out or config.get("out_csv")
    if out_csv:
        with open(out_csv, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        print(csv_text, end="")
    report_dir = args.report_dir or config.get("report_dir")
    if report_dir:
        os.makedirs(report_dir, exist_ok=True)
        for report in reports:
            name = report.cell.config_hash() + ".json"
            with open(os.path.join(report_dir, name), "w", encoding="utf-8") as fh:
                json.dump(report.as_dict(), fh)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    stores = _load_stores(args.stores)
    manifest = load_manifest(args.manifest) if args.manifest else None
    dim = next(iter(stores.values())).dim
    embedder = _make_embedder(args.embedder, dim, args.model_id)
    reports: dict[str, dict] = {}
    if args.reports and os.path.isdir(args.reports):
        for name in sorted(os.listdir(args.reports)):
            if name.endswith(".json"):
                with open(os.path.join(args.reports, name), encoding="utf-8") as fh:
                    reports[name[: -len(".json")]] = json.load(fh)
    app = create_app(stores, embedder, manifest=manifest, reports=reports)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest) if args.manifest else None
    dataset = load_annotations(args.annotations, manifest)
    summary = summarize(dataset)
    out = summary.as_dict()
    if not args.heatmap:
        del out["heatmap"]["values"]
    print(json.dumps(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridsearch",
        description="Region-constrained text-to-image retrieval toolkit",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("ingest", help="build a store from raw vectors")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--vectors", required=True, help="raw float32 file + .json sidecar")
    sub.add_argument("--region-set", required=True, help="whole, static5[@e=..], static9[@e=..]")
    sub.add_argument("--out", required=True, help="store directory")
    sub.set_defaults(func=_cmd_ingest)

    sub = subs.add_parser("validate", help="check an annotation file")
    sub.add_argument("--annotations", required=True)
    sub.add_argument("--manifest", default=None)
    sub.set_defaults(func=_cmd_validate)

    sub = subs.add_parser("query", help="run one query against loaded stores")
    sub.add_argument("--stores", required=True)
    sub.add_argument("--manifest", default=None)
    sub.add_argument("--model", required=True)
    sub.add_argument("--text", required=True)
    sub.add_argument("--box", default=None, help="x1,y1,x2,y2 normalized")
    sub.add_argument("--selection", default="any-overlap")
    sub.add_argument("--enlargement", type=float, default=0.0)
    sub.add_argument("--top-k", type=int, default=10)
    _add_embedder_args(sub)
    sub.set_defaults(func=_cmd_query)

    sub = subs.add_parser("eval", help="evaluate one configuration")
    sub.add_argument("--annotations", required=True)
    sub.add_argument("--manifest", default=None)
    sub.add_argument("--stores", required=True)
    sub.add_argument("--model", required=True)
    sub.add_argument("--length", default="long", choices=["short", "long"])
    sub.add_argument(
        "--subset", default="all", choices=[s.value for s in Subset]
    )
    sub.add_argument("--selection", default="any-overlap")
    sub.add_argument("--enlargement", type=float, default=0.0)
    sub.add_argument("--sigma-shift", type=float, default=0.0)
    sub.add_argument(
        "--sigma-area",
        type=float,
        default=0.0,
        help="std-dev of the size scale; values above 1 are percentages",
    )
    sub.add_argument("--seeds", type=str, default="0", help="comma-separated")
    sub.add_argument("--per-annotation", action="store_true")
    sub.add_argument(
        "--select-on-base",
        action="store_true",
        help="select cells on the un-enlarged layout, score enlarged rows",
    )
    sub.add_argument("--format", default="json", choices=["json", "csv"])
    _add_embedder_args(sub)
    sub.set_defaults(func=_cmd_eval)

    sub = subs.add_parser("sweep", help="run a configured evaluation sweep")
    sub.add_argument("--config", required=True, help="TOML sweep configuration")
    sub.add_argument("--out", default=None, help="CSV output path (default stdout)")
    sub.add_argument("--report-dir", default=None, help="per-cell JSON directory")
    sub.set_defaults(func=_cmd_sweep)

    sub = subs.add_parser("serve", help="start the HTTP service")
    sub.add_argument("--stores", required=True)
    sub.add_argument("--manifest", default=None)
    sub.add_argument("--reports", default=None, help="directory of report JSON files")
    sub.add_argument("--host", default="127.0.0.1")
    sub.add_argument("--port", type=int, default=8000)
    _add_embedder_args(sub)
    sub.set_defaults(func=_cmd_serve)

    sub = subs.add_parser("stats", help="summarize an annotation collection")
    sub.add_argument("--annotations", required=True)
    sub.add_argument("--manifest", default=None)
    sub.add_argument(
        "--heatmap", action="store_true", help="include occupancy heatmap values"
    )
    sub.set_defaults(func=_cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(json.dumps({"error": str(exc) or repr(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

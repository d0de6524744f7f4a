"""Command-line pipeline orchestration.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error. Every run
writes a run-log JSON (config hash, versions, --threads) next to its
outputs; logs carry no timestamps so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, dataset, pfr
from .config import PipelineConfig, load_pipeline_config
from .covariance import change_basis, compute_covariance, intensity_channels
from .decomposition import export_halpha_density, h_alpha_field, zone_map
from .metrics import confusion, metrics as compute_metrics, report_json, report_text
from .simulate import generate_scene, scene_spec_from_json, truth_json
from .types import FormatError, ValidationError, ZoneMap
from .wishart import (
    collapse_span_bins,
    merge_zones_to_classes,
    span_binned_init,
    wishart_iterate,
)


class _Parser(argparse.ArgumentParser):
    # spec'd contract: bad usage exits 1, not argparse's default 2
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("POLSAR_THREADS")
    return int(env) if env else 1


def _write_run_log(out: Path, command: str, config: dict, threads: int) -> None:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    doc = {
        "command": command,
        "config": config,
        "config_hash": hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
        "threads": threads,
        "versions": {"polsarkit": __version__, "numpy": np.__version__},
    }
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _runlog_path(primary_out: Path) -> Path:
    if primary_out.suffix:
        return primary_out.with_name(primary_out.stem + ".runlog.json")
    return primary_out / "run_log.json"


def cmd_simulate(args) -> int:
    spec = scene_spec_from_json(args.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    slc, truth = generate_scene(spec)
    pfr.save_slc(out / "slc.pfr", slc)
    pfr.save_class_map(out / "truth.pfr", truth, meta=slc.meta.to_dict())
    with open(out / "truth.json", "w", encoding="utf-8") as f:
        json.dump(truth_json(spec.classes), f, indent=2, sort_keys=True)
        f.write("\n")
    _write_run_log(out / "run_log.json", "simulate",
                   json.loads(Path(args.spec).read_text()) if Path(args.spec).exists() else {},
                   _threads(args))
    return 0


def cmd_covariance(args) -> int:
    slc = pfr.load_slc(args.slc)
    cov = compute_covariance(slc, window=args.window, basis=args.basis)
    pfr.save_covariance(args.out, cov)
    _write_run_log(_runlog_path(Path(args.out)), "covariance",
                   {"slc": str(args.slc), "window": args.window, "basis": args.basis},
                   _threads(args))
    return 0


def cmd_halpha(args) -> int:
    cov = pfr.load_covariance(args.cov)
    if cov.basis != "pauli":
        cov = change_basis(cov, "pauli")
    field = h_alpha_field(cov)
    pfr.save_halpha(args.out, field, meta=cov.meta.to_dict())
    _write_run_log(_runlog_path(Path(args.out)), "halpha",
                   {"cov": str(args.cov)}, _threads(args))
    return 0


def cmd_zones(args) -> int:
    field = pfr.load_halpha(args.halpha)
    zm = zone_map(field)
    pfr.save_zone_map(args.out, zm)
    _write_run_log(_runlog_path(Path(args.out)), "zones",
                   {"halpha": str(args.halpha)}, _threads(args))
    return 0


def cmd_wishart(args) -> int:
    cov = pfr.load_covariance(args.cov)
    if args.init_kind == "classes":
        init = pfr.load_class_map(args.init)
    else:
        init = span_binned_init(cov, pfr.load_zone_map(args.init), bins=args.span_bins)
    result, log = wishart_iterate(
        cov, init, max_iter=args.max_iter, change_tol=args.change_tol
    )
    pfr.save_class_map(args.out, result, meta=cov.meta.to_dict())
    log_path = Path(args.out).with_suffix(".log.jsonl")
    with open(log_path, "w", encoding="utf-8") as f:
        for entry in log:
            f.write(json.dumps(entry, sort_keys=True) + "\n")
    _write_run_log(_runlog_path(Path(args.out)), "wishart",
                   {"cov": str(args.cov), "init": str(args.init),
                    "max_iter": args.max_iter, "change_tol": args.change_tol},
                   _threads(args))
    return 0


def cmd_merge_classes(args) -> int:
    zones = pfr.load_class_map(args.zones)
    if args.mapping:
        mapping = {int(k): int(v) for k, v in json.loads(Path(args.mapping).read_text()).items()}
        merged = merge_zones_to_classes(zones, mapping=mapping,
                                        class_names=args.class_names.split(",") if args.class_names else None)
    elif args.reference:
        ref = pfr.load_class_map(args.reference)
        merged = merge_zones_to_classes(zones, reference=ref)
    else:
        raise ValidationError("provide --mapping or --reference")
    pfr.save_class_map(args.out, merged)
    _write_run_log(_runlog_path(Path(args.out)), "merge-classes",
                   {"zones": str(args.zones), "mapping": args.mapping,
                    "reference": args.reference}, _threads(args))
    return 0


def cmd_eval(args) -> int:
    pred = pfr.load_class_map(args.pred)
    truth = pfr.load_class_map(args.truth)
    cm = confusion(pred, truth)
    sys.stdout.write(report_text(cm))
    if args.out:
        Path(args.out).write_text(report_json(cm), encoding="utf-8")
        _write_run_log(_runlog_path(Path(args.out)), "eval",
                       {"pred": str(args.pred), "truth": str(args.truth)},
                       _threads(args))
    return 0


def cmd_plot_halpha(args) -> int:
    field = pfr.load_halpha(args.halpha)
    mask = pfr.load_class_map(args.mask) if args.mask else None
    written = export_halpha_density(
        field, args.out, mask=mask, bins_h=args.bins_h, bins_alpha=args.bins_alpha
    )
    _write_run_log(_runlog_path(Path(args.out)), "plot-halpha",
                   {"halpha": str(args.halpha), "mask": args.mask,
                    "bins_h": args.bins_h, "bins_alpha": args.bins_alpha},
                   _threads(args))
    sys.stdout.write("\n".join(str(p) for p in written) + "\n")
    return 0


def build_dataset_artifacts(cfg: PipelineConfig, out: Path, *, intensity, classified, truth) -> dict:
    """Stack, tile, augment, split and export per the pipeline config."""
    stack, names = dataset.stack_channels(intensity, classified, selection=cfg.channels)
    pfr.write_raster(out / "stack.pfr", stack,
                     meta={"channel_names": names, "class_names": truth.class_names})
    base = dataset.tile(
        stack, truth, size=cfg.tile_size, stride=cfg.tile_stride,
        min_labeled_fraction=cfg.min_labeled_fraction,
        scene_id=cfg.scene and f"synthetic-{cfg.scene.seed}" or "",
        channel_names=names,
    )
    if not len(base):
        raise ValidationError(
            "tiling produced no patches; lower tile.size or min_labeled_fraction"
        )
    augmented = dataset.augment(base)
    manifest = dataset.split(augmented, val_ratio=cfg.val_ratio, seed=cfg.split_seed)
    dataset.export(augmented, manifest, out / "dataset")
    return {"base_patches": len(base), "samples": len(augmented)}


def cmd_dataset(args) -> int:
    cfg = load_pipeline_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = _run_pipeline(cfg, out, dataset_only=True)
    _write_run_log(out / "run_log.json", "dataset", cfg.to_dict(), _threads(args))
    sys.stdout.write(json.dumps(artifacts, sort_keys=True) + "\n")
    return 0


def _run_pipeline(cfg: PipelineConfig, out: Path, dataset_only: bool = False) -> dict:
    slc, truth = generate_scene(cfg.scene)
    pfr.save_slc(out / "slc.pfr", slc)
    pfr.save_class_map(out / "truth.pfr", truth, meta=slc.meta.to_dict())
    with open(out / "truth.json", "w", encoding="utf-8") as f:
        json.dump(truth_json(cfg.scene.classes), f, indent=2, sort_keys=True)
        f.write("\n")

    cov_lex = compute_covariance(slc, window=cfg.window, basis="lexicographic")
    cov_pauli = change_basis(cov_lex, "pauli")
    cov_work = cov_pauli if cfg.basis == "pauli" else cov_lex
    pfr.save_covariance(out / "covariance.pfr", cov_work)

    intens = intensity_channels(cov_lex, db_clamp=cfg.db_clamp)
    field = h_alpha_field(cov_pauli)
    pfr.save_halpha(out / "halpha.pfr", field, meta=cov_pauli.meta.to_dict())

    zm = zone_map(field)
    pfr.save_zone_map(out / "zones.pfr", zm)

    init = span_binned_init(cov_work, zm, bins=cfg.wishart_span_bins)
    refined, log = wishart_iterate(
        cov_work, init, max_iter=cfg.wishart_max_iter, change_tol=cfg.wishart_change_tol
    )
    pfr.save_class_map(out / "wishart.pfr", refined, meta=cov_work.meta.to_dict())
    with open(out / "wishart.log.jsonl", "w", encoding="utf-8") as f:
        for entry in log:
            f.write(json.dumps(entry, sort_keys=True) + "\n")

    if cfg.zone_to_class is not None:
        refined_zones = collapse_span_bins(refined, cfg.wishart_span_bins)
        merged = merge_zones_to_classes(
            refined_zones, mapping=cfg.zone_to_class, class_names=truth.class_names
        )
    else:
        merged = merge_zones_to_classes(refined, reference=truth)
    pfr.save_class_map(out / "classes.pfr", merged, meta=slc.meta.to_dict())

    cm = confusion(merged, truth)
    (out / "eval.json").write_text(report_json(cm), encoding="utf-8")
    (out / "eval.txt").write_text(report_text(cm), encoding="utf-8")

    counts = build_dataset_artifacts(
        cfg, out,
        intensity={"hh": intens["c11"], "vv": intens["c22"],
                   "hh_db": intens["c11_db"], "vv_db": intens["c22_db"]},
        classified={"zones": zm.as_class_map(), "wishart": refined},
        truth=truth,
    )
    scores = compute_metrics(cm)
    summary = {
        "overall_accuracy": scores["overall_accuracy"],
        "kappa": scores["kappa"],
        **counts,
    }
    return summary


def cmd_pipeline(args) -> int:
    cfg = load_pipeline_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = _run_pipeline(cfg, out)
    _write_run_log(out / "run_log.json", "pipeline", cfg.to_dict(), _threads(args))
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="polsarkit", description=__doc__)
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (results are thread-count independent); "
                             "falls back to POLSAR_THREADS")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dual-pol scene")
    p.add_argument("--spec", required=True, help="SceneSpec JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("covariance", help="boxcar covariance estimation")
    p.add_argument("--slc", required=True)
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--basis", choices=["pauli", "lexicographic"], default="pauli")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_covariance)

    p = sub.add_parser("halpha", help="H/alpha decomposition of a covariance field")
    p.add_argument("--cov", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_halpha)

    p = sub.add_parser("zones", help="H/alpha-plane zone segmentation")
    p.add_argument("--halpha", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_zones)

    p = sub.add_parser("wishart", help="iterative Wishart classification")
    p.add_argument("--cov", required=True)
    p.add_argument("--init", required=True, help="seed label map (PFR)")
    p.add_argument("--init-kind", choices=["zones", "classes"], default="zones")
    p.add_argument("--span-bins", type=int, default=3,
                   help="power-quantile sub-seeds per zone (1 = plain zones)")
    p.add_argument("--max-iter", type=int, default=20)
    p.add_argument("--change-tol", type=float, default=0.001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wishart)

    p = sub.add_parser("merge-classes", help="map zone/cluster labels to land classes")
    p.add_argument("--zones", required=True, help="label map to relabel (PFR)")
    p.add_argument("--mapping", help="JSON file {zone: class}")
    p.add_argument("--reference", help="reference class map (PFR) for majority vote")
    p.add_argument("--class-names", help="comma-separated names for --mapping")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge_classes)

    p = sub.add_parser("dataset", help="build the training dataset for a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("eval", help="accuracy report for a predicted class map")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="write JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot-halpha", help="export H/alpha plane densities as CSV")
    p.add_argument("--halpha", required=True)
    p.add_argument("--mask", help="class map (PFR) for per-class densities")
    p.add_argument("--bins-h", type=int, default=20)
    p.add_argument("--bins-alpha", type=int, default=18)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_halpha)

    p = sub.add_parser("pipeline", help="simulate -> covariance -> H/alpha -> zones "
                                        "-> Wishart -> merge -> dataset -> eval")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValidationError, FormatError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

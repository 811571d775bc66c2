"""Command-line entry points orchestrating the pipeline without the UI."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    SplitSpec,
    SynthConfig,
    fill_missing,
    load_speed_csv,
    synth_generate,
)
from .data.dataset import load_dataset, save_dataset
from .data.io import load_network
from .data.preprocess import chronological_split, daily_trend
from .data.types import DataError
from .deps import causality_scan, dtw_matrix, elbow_suggest, spectral_cluster
from .deps.dtw import DistanceMatrix
from .enforce import build_plan, run_alternative_inference
from .errors import compute_errors, quartile_cohorts
from .model import ModelConfig, load_checkpoint, save_checkpoint, train
from .model.training import predict
from .snapshot import Snapshot, build_snapshot, create_app


def _config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, default=str).encode()).hexdigest()


def write_manifest(target: Path, command: str, args: argparse.Namespace, seeds: dict) -> None:
    """Record versions, seeds, and the config hash beside an output."""
    import torch

    # the output path is not semantic config; dropping it keeps runs to
    # different directories byte-identical
    doc = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    manifest = {
        "tool": "trafficlens",
        "version": __version__,
        "numpy": np.__version__,
        "torch": torch.__version__,
        "command": command,
        "config": {k: str(v) for k, v in sorted(doc.items())},
        "config_hash": _config_hash(doc),
        "seeds": seeds,
    }
    target.parent.mkdir(parents=True, exist_ok=True)
    path = target / "run_manifest.json" if target.is_dir() else target.with_suffix(".manifest.json")
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1))


def cmd_ingest(args: argparse.Namespace) -> int:
    panel = load_speed_csv(args.speeds, unit=args.unit)
    panel = fill_missing(panel)
    network = load_network(args.graph, args.coords, roads=panel.roads)
    out = Path(args.out)
    save_dataset(out, panel, network)
    write_manifest(out, "ingest", args, seeds={})
    print(f"ingested {panel.num_roads} roads x {panel.num_steps} steps -> {out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.config:
        cfg = SynthConfig.from_json(Path(args.config).read_text())
    else:
        cfg = SynthConfig(
            clusters=args.clusters,
            roads_per_cluster=args.roads_per_cluster,
            days=args.days,
            noise_std=args.noise,
            event_rate_per_day=args.event_rate,
        )
    panel, network, truth = synth_generate(cfg, seed=args.seed)
    out = Path(args.out)
    save_dataset(out, panel, network, truth)
    (out / "synth_config.json").write_text(cfg.to_json())
    write_manifest(out, "synth", args, seeds={"synth": args.seed})
    print(f"generated {panel.num_roads} roads x {panel.num_steps} steps -> {out}")
    return 0


def _split(args: argparse.Namespace, panel):
    spec = SplitSpec(args.train_fraction, args.val_fraction, args.test_fraction)
    return chronological_split(panel, spec, min_steps=24)


def cmd_train(args: argparse.Namespace) -> int:
    panel, network = load_dataset(args.data)
    train_p, val_p, _ = _split(args, panel)
    config = ModelConfig(
        heads=args.heads,
        width=args.width,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
    )
    state = train(train_p, val_p, network, config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(state, out)
    write_manifest(out, "train", args, seeds={"model": args.seed})
    print(f"trained: best val MAE {state.history['best_val_mae']:.4f} -> {out}.json/.bin")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    panel, network = load_dataset(args.data)
    train_p, _, test_p = _split(args, panel)
    if args.what == "dtw":
        trends = {r: daily_trend(train_p, r).slots for r in panel.roads}
        d = dtw_matrix(trends, window=args.window)
        Path(args.out).write_text(json.dumps(d.to_dict(), sort_keys=True))
        write_manifest(Path(args.out), "analyze dtw", args, seeds={})
        print(f"dtw matrix ({len(d.ids)} roads) -> {args.out}")
    elif args.what == "cluster":
        d = DistanceMatrix.from_dict(json.loads(Path(args.distance).read_text()))
        suggested, curve = elbow_suggest(d, k_max=min(args.k_max, len(d.ids) - 1), seed=args.seed)
        k = args.k if args.k else suggested
        assignment = spectral_cluster(d, k, seed=args.seed)
        doc = {"suggested_k": suggested, **assignment.to_dict(), "inertia_curve": [list(c) for c in curve]}
        Path(args.out).write_text(json.dumps(doc, sort_keys=True))
        write_manifest(Path(args.out), "analyze cluster", args, seeds={"cluster": args.seed})
        print(f"k={k} (elbow suggested {suggested}) -> {args.out}")
    elif args.what == "granger":
        series = {r: test_p.series(r) for r in panel.roads}
        candidates = args.candidates.split(",") if args.candidates else [
            r for r in panel.roads if r != args.target
        ]
        results = causality_scan(args.target, candidates, series, max_lag=args.max_lag)
        for r in results:
            print(f"{r.cause} -> {r.effect}: {r.display()}")
        if not results:
            print(f"no candidate Granger-causes {args.target} at p < 0.05")
    elif args.what == "errors":
        state = load_checkpoint(args.model)
        preds = predict(state, test_p)
        table = compute_errors(preds, test_p)
        Path(args.out).write_text(json.dumps(table.to_dict(), sort_keys=True))
        csv_path = Path(args.out).with_suffix(".csv")
        lines = ["road_id,horizon,mae,rmse,mape"]
        for j, road in enumerate(table.roads):
            for hi, h in enumerate(table.horizons):
                mape = table.mape[j, hi]
                lines.append(
                    f"{road},{h},{table.mae[j, hi]!r},{table.rmse[j, hi]!r},"
                    f"{'' if np.isnan(mape) else repr(float(mape))}"
                )
        csv_path.write_text("\n".join(lines) + "\n")
        write_manifest(Path(args.out), "analyze errors", args, seeds={})
        cohorts = quartile_cohorts(table)
        print(f"errors -> {args.out} (+.csv); Q1={cohorts.q1:.3f} Q3={cohorts.q3:.3f}")
    return 0


def cmd_snapshot(args: argparse.Namespace) -> int:
    panel, network = load_dataset(args.data)
    state = load_checkpoint(args.model)
    snap = build_snapshot(
        args.out,
        dataset=args.name,
        panel=panel,
        state=state,
        split=SplitSpec(args.train_fraction, args.val_fraction, args.test_fraction),
        dtw_window=args.window,
        k=args.k,
        k_max=args.k_max,
        seed=args.seed,
        max_windows=args.max_windows,
    )
    write_manifest(Path(args.out), "snapshot", args, seeds={"snapshot": args.seed})
    print(f"snapshot {snap.snapshot_id[:12]} -> {args.out}")
    return 0


def cmd_enforce(args: argparse.Namespace) -> int:
    snap = Snapshot(Path(args.snapshot))
    clusters = [int(c) for c in args.clusters.split(",")]
    plan = build_plan(
        snap.errors,
        snap.cohorts,
        snap.clusters,
        snap.distance,
        snap.panel,
        selected=clusters,
        k=args.k,
        alpha=args.alpha,
        head_average=args.head_average,
    )
    report = run_alternative_inference(snap.state, plan, snap.test_panel)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=1))
    out.with_suffix(".csv").write_text(report.to_csv())
    write_manifest(out, "enforce", args, seeds={})
    print(
        f"enforced {len(report.targets)} roads: mean dMAE {report.mean_delta:+.4f}, "
        f"{report.fraction_improved:.0%} improved -> {out}"
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    snap = Snapshot(Path(args.snapshot))
    snap.verify()
    app = create_app(snap, workers=args.workers, static_dir=args.static)
    host, _, port = args.bind.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    report = json.loads(Path(args.report).read_text())
    hist = report["histogram"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    edges = hist["edges"]
    lines = ["bin_lo,bin_hi,before,after"]
    for i in range(len(hist["before"])):
        lines.append(f"{edges[i]!r},{edges[i + 1]!r},{hist['before'][i]},{hist['after'][i]}")
    (out / "error_distribution.csv").write_text("\n".join(lines) + "\n")

    centers = [(edges[i] + edges[i + 1]) / 2 for i in range(len(hist["before"]))]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(centers, hist["before"], label="original", color="#888888")
    ax.plot(centers, hist["after"], label="enforced", color="#1f77b4")
    ax.set_xlabel("absolute error")
    ax.set_ylabel("frequency")
    ax.legend()
    ax.set_title(f"mean shift {hist['mean_shift']:+.3f}")
    fig.tight_layout()
    fig.savefig(out / "error_distribution.svg")
    plt.close(fig)
    write_manifest(out, "export", args, seeds={})
    print(f"exported histogram CSV and SVG -> {out}")
    return 0


def _add_split_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--test-fraction", type=float, default=0.2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trafficlens")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load speeds/graph CSVs into a dataset directory")
    p.add_argument("--speeds", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--coords")
    p.add_argument("--unit", default="km/h")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", help="generator config JSON (overrides other flags)")
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--roads-per-cluster", type=int, default=5)
    p.add_argument("--days", type=int, default=14)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--event-rate", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the forecaster on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    _add_split_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="run one analysis stage")
    p.add_argument("what", choices=["dtw", "cluster", "granger", "errors"])
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="analysis.json")
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--distance", help="distance matrix JSON (for cluster)")
    p.add_argument("--k", type=int)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--target", help="target road id (for granger)")
    p.add_argument("--candidates", help="comma-separated candidate ids (for granger)")
    p.add_argument("--max-lag", type=int, default=12)
    p.add_argument("--model", help="model checkpoint path (for errors)")
    p.add_argument("--seed", type=int, default=0)
    _add_split_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("snapshot", help="build an immutable analysis snapshot")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--name", default="dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--k", type=int)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--max-windows", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    _add_split_args(p)
    p.set_defaults(func=cmd_snapshot)

    p = sub.add_parser("enforce", help="run an attention-enforcement what-if")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--clusters", required=True, help="comma-separated cluster indices")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--head-average", action="store_true")
    p.add_argument("--out", default="enforcement.json")
    p.set_defaults(func=cmd_enforce)

    p = sub.add_parser("serve", help="serve a snapshot over HTTP")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--static", help="built UI assets directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="export before/after error histograms (CSV + SVG)")
    p.add_argument("--report", required=True)
    p.add_argument("--out", default="export")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "analyze" and args.what == "granger" and not args.target:
        parser.error("analyze granger requires --target")
    if args.command == "analyze" and args.what == "errors" and not args.model:
        parser.error("analyze errors requires --model")
    if args.command == "analyze" and args.what == "cluster" and not args.distance:
        parser.error("analyze cluster requires --distance")
    try:
        return args.func(args)
    except (DataError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

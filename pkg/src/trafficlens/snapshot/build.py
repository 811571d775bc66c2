"""Immutable analysis snapshots: data, model, and all derived analytics.

A snapshot is a directory of byte-deterministic artifacts; its id is the
hash of their contents, so rebuilding from identical inputs and seeds gives
an identical snapshot. Builds are atomic: everything lands in a temp
directory that is renamed into place only on success.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..data.preprocess import chronological_split, daily_trend
from ..data.types import DataError, RoadNetwork, SpeedPanel, SplitSpec
from ..deps.clustering import elbow_suggest, spectral_cluster, ClusterAssignment
from ..deps.dtw import DistanceMatrix, dtw_matrix
from ..errors import (
    ErrorCohorts,
    ErrorTable,
    PredictionSet,
    compute_errors,
    quartile_cohorts,
)
from ..model.state import ModelState, load_checkpoint, save_checkpoint
from ..model.training import predict
from ..views import head_cluster_matrices

SNAPSHOT_VERSION = 1


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=1))


def _save_panel(dirpath: Path, panel: SpeedPanel) -> None:
    _write_json(
        dirpath / "panel.json",
        {
            "start": panel.start.astimezone(timezone.utc).isoformat(),
            "roads": list(panel.roads),
            "steps": panel.num_steps,
            "unit": panel.unit,
        },
    )
    (dirpath / "panel.bin").write_bytes(np.ascontiguousarray(panel.values, dtype=np.float64).tobytes())
    (dirpath / "mask.bin").write_bytes(np.packbits(panel.mask).tobytes())


def _load_panel(dirpath: Path) -> SpeedPanel:
    meta = json.loads((dirpath / "panel.json").read_text())
    shape = (meta["steps"], len(meta["roads"]))
    values = np.frombuffer((dirpath / "panel.bin").read_bytes(), dtype=np.float64).reshape(shape).copy()
    bits = np.unpackbits(np.frombuffer((dirpath / "mask.bin").read_bytes(), dtype=np.uint8))
    mask = bits[: shape[0] * shape[1]].reshape(shape).astype(bool)
    return SpeedPanel(
        start=datetime.fromisoformat(meta["start"]),
        roads=tuple(meta["roads"]),
        values=values,
        mask=mask,
        unit=meta["unit"],
    )


def build_snapshot(
    out_dir: str | Path,
    dataset: str,
    panel: SpeedPanel,
    state: ModelState,
    split: SplitSpec = SplitSpec(),
    dtw_window: int = 4,
    k: int | None = None,
    k_max: int = 8,
    seed: int = 0,
    horizon: int = 15,
    max_windows: int = 256,
) -> "Snapshot":
    """Run the full analytics pipeline and persist everything atomically."""
    if not state.trained:
        raise DataError("snapshot build refused: model checkpoint is untrained")
    if panel.roads != state.network.roads:
        raise DataError("panel roads differ from the model's graph")
    if np.isnan(panel.values).any():
        raise DataError("panel has missing values; run fill_missing before building")

    out_dir = Path(out_dir)
    tmp = out_dir.parent / (out_dir.name + ".building")
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    try:
        train_p, val_p, test_p = chronological_split(panel, split, min_steps=24)
        trends = {r: daily_trend(train_p, r) for r in panel.roads}
        distance = dtw_matrix({r: t.slots for r, t in trends.items()}, window=dtw_window)
        suggested_k, curve = elbow_suggest(distance, k_max=min(k_max, panel.num_roads - 1), seed=seed)
        chosen_k = k if k is not None else suggested_k
        assignment = spectral_cluster(distance, chosen_k, seed=seed)
        assignment = ClusterAssignment(
            k=assignment.k, label=assignment.label, inertia_curve=tuple(curve),
            degenerate=assignment.degenerate,
        )
        predictions = predict(state, test_p)
        errors = compute_errors(predictions, test_p)
        cohorts = quartile_cohorts(errors, horizon)
        hc = {
            scale: head_cluster_matrices(
                state, test_p, assignment, cohorts,
                scale=scale, horizon=horizon, max_windows=max_windows, seed=seed,
            ).to_dict()
            for scale in ("global", "local")
        }

        _save_panel(tmp, panel)
        save_checkpoint(state, tmp / "model")
        _write_json(tmp / "distance.json", distance.to_dict())
        _write_json(tmp / "clusters.json", {"suggested_k": suggested_k, **assignment.to_dict()})
        _write_json(tmp / "errors.json", errors.to_dict())
        _write_json(tmp / "cohorts.json", cohorts.to_dict())
        _write_json(
            tmp / "trends.json",
            {r: {"slots": t.slots.tolist(), "support": t.support.tolist()} for r, t in trends.items()},
        )
        _write_json(
            tmp / "predictions.json",
            {"output_start": predictions.output_start.tolist(), "windows": len(predictions.output_start)},
        )
        (tmp / "predictions.bin").write_bytes(
            np.ascontiguousarray(predictions.values, dtype=np.float64).tobytes()
        )
        _write_json(tmp / "headclusters.json", hc)
        _write_json(
            tmp / "splits.json",
            {
                "fractions": [split.train_fraction, split.val_fraction, split.test_fraction],
                "train_steps": train_p.num_steps,
                "val_steps": val_p.num_steps,
                "test_steps": test_p.num_steps,
            },
        )

        artifacts = {}
        for f in sorted(p for p in tmp.iterdir() if p.is_file()):
            artifacts[f.name] = _sha(f.read_bytes())
        build_config = {
            "dataset": dataset,
            "split": [split.train_fraction, split.val_fraction, split.test_fraction],
            "dtw_window": dtw_window,
            "k": k,
            "k_max": k_max,
            "seed": seed,
            "horizon": horizon,
            "max_windows": max_windows,
            "model_seed": state.config.seed,
        }
        manifest = {
            "version": SNAPSHOT_VERSION,
            "dataset": dataset,
            "id": _sha(json.dumps(artifacts, sort_keys=True).encode()),
            "config_hash": _sha(json.dumps(build_config, sort_keys=True).encode()),
            "build_config": build_config,
            "date_range": {
                "start": panel.start.astimezone(timezone.utc).isoformat(),
                "end": panel.end.astimezone(timezone.utc).isoformat(),
            },
            "test_range": {
                "start": test_p.start.astimezone(timezone.utc).isoformat(),
                "end": test_p.end.astimezone(timezone.utc).isoformat(),
            },
            "k": assignment.k,
            "suggested_k": suggested_k,
            "horizon_default": horizon,
            "q1": cohorts.q1,
            "q3": cohorts.q3,
            "unit": panel.unit,
            "artifacts": artifacts,
        }
        _write_json(tmp / "manifest.json", manifest)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if out_dir.exists():
        shutil.rmtree(out_dir)
    tmp.rename(out_dir)
    return Snapshot(out_dir)


@dataclass
class Snapshot:
    """Read-only handle over a built snapshot directory."""

    root: Path

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        if not (self.root / "manifest.json").exists():
            raise DataError(f"{self.root} is not a snapshot (no manifest.json)")
        self.manifest = json.loads((self.root / "manifest.json").read_text())
        self._cache: dict = {}

    def verify(self) -> None:
        """Check every artifact hash recorded in the manifest."""
        for name, digest in self.manifest["artifacts"].items():
            actual = _sha((self.root / name).read_bytes())
            if actual != digest:
                raise DataError(f"artifact {name} hash mismatch")

    @property
    def snapshot_id(self) -> str:
        return self.manifest["id"]

    @property
    def panel(self) -> SpeedPanel:
        if "panel" not in self._cache:
            self._cache["panel"] = _load_panel(self.root)
        return self._cache["panel"]

    @property
    def splits(self) -> dict:
        return self._json("splits.json")

    @property
    def test_panel(self) -> SpeedPanel:
        if "test_panel" not in self._cache:
            s = self.splits
            begin = s["train_steps"] + s["val_steps"]
            self._cache["test_panel"] = self.panel.slice_steps(begin, begin + s["test_steps"])
        return self._cache["test_panel"]

    @property
    def state(self) -> ModelState:
        if "state" not in self._cache:
            self._cache["state"] = load_checkpoint(self.root / "model")
        return self._cache["state"]

    @property
    def network(self) -> RoadNetwork:
        return self.state.network

    @property
    def distance(self) -> DistanceMatrix:
        if "distance" not in self._cache:
            self._cache["distance"] = DistanceMatrix.from_dict(self._json("distance.json"))
        return self._cache["distance"]

    @property
    def clusters(self) -> ClusterAssignment:
        if "clusters" not in self._cache:
            self._cache["clusters"] = ClusterAssignment.from_dict(self._json("clusters.json"))
        return self._cache["clusters"]

    @property
    def errors(self) -> ErrorTable:
        if "errors" not in self._cache:
            self._cache["errors"] = ErrorTable.from_dict(self._json("errors.json"))
        return self._cache["errors"]

    @property
    def cohorts(self) -> ErrorCohorts:
        if "cohorts" not in self._cache:
            self._cache["cohorts"] = ErrorCohorts.from_dict(self._json("cohorts.json"))
        return self._cache["cohorts"]

    @property
    def predictions(self) -> PredictionSet:
        if "predictions" not in self._cache:
            meta = self._json("predictions.json")
            n = len(self.panel.roads)
            values = (
                np.frombuffer((self.root / "predictions.bin").read_bytes(), dtype=np.float64)
                .reshape(meta["windows"], 12, n)
                .copy()
            )
            self._cache["predictions"] = PredictionSet(
                roads=self.panel.roads,
                output_start=np.asarray(meta["output_start"], dtype=int),
                values=values,
                unit=self.panel.unit,
            )
        return self._cache["predictions"]

    @property
    def trends(self) -> dict:
        return self._json("trends.json")

    @property
    def headclusters(self) -> dict:
        return self._json("headclusters.json")

    def _json(self, name: str) -> dict:
        if name not in self._cache:
            self._cache[name] = json.loads((self.root / name).read_text())
        return self._cache[name]

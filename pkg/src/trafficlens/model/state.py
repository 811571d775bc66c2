"""Trained model state and a deterministic JSON+binary checkpoint format."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..data.types import RoadNetwork
from .config import ModelConfig
from .network import Forecaster

CHECKPOINT_VERSION = 1


def graph_hash(network: RoadNetwork) -> str:
    doc = {
        "roads": list(network.roads),
        "edges": [[a, b, w] for a, b, w in network.edges],
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


@dataclass
class ModelState:
    """Learned parameters plus the graph and normalization stats they assume."""

    config: ModelConfig
    network: RoadNetwork
    norm_mean: np.ndarray  # per-road mean of training speeds
    norm_std: np.ndarray
    params: dict[str, np.ndarray]
    trained: bool = False
    unit: str = "km/h"
    history: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.network.roads)
        if self.norm_mean.shape != (n,) or self.norm_std.shape != (n,):
            raise ValueError("normalization stats must be per road")
        if np.any(self.norm_std <= 0):
            raise ValueError("normalization std must be positive")
        for name, p in self.params.items():
            if not np.all(np.isfinite(p)):
                raise ValueError(f"parameter {name} contains non-finite values")

    def build_module(self) -> Forecaster:
        """Instantiate the network with these parameters; cached per state."""
        cached = getattr(self, "_module", None)
        if cached is not None:
            return cached
        model = Forecaster(self.config).to(torch.float64)
        state_dict = {k: torch.from_numpy(v.copy()) for k, v in self.params.items()}
        model.load_state_dict(state_dict)
        model.eval()
        self._module = model
        return model

    def adj_mask(self) -> torch.Tensor:
        return torch.from_numpy(self.network.adjacency() > 0)


def save_checkpoint(state: ModelState, path: str | Path) -> None:
    """Write `<path>.json` (metadata + parameter index) and `<path>.bin` (raw data).

    Both files are byte-deterministic for identical states.
    """
    path = Path(path)
    names = sorted(state.params)
    index = []
    offset = 0
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(state.params[name], dtype=np.float64)
        blob = arr.tobytes()
        index.append({"name": name, "shape": list(arr.shape), "offset": offset, "size": len(blob)})
        offset += len(blob)
        blobs.append(blob)
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": state.config.to_dict(),
        "roads": list(state.network.roads),
        "edges": [[a, b, w] for a, b, w in state.network.edges],
        "coordinates": {r: list(c) for r, c in sorted(state.network.coordinates.items())},
        "norm_mean": state.norm_mean.tolist(),
        "norm_std": state.norm_std.tolist(),
        "unit": state.unit,
        "trained": state.trained,
        "graph_hash": graph_hash(state.network),
        "history": state.history,
        "params": index,
    }
    path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True, indent=1))
    path.with_suffix(".bin").write_bytes(b"".join(blobs))


def load_checkpoint(path: str | Path) -> ModelState:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta["version"] != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {meta['version']}")
    blob = path.with_suffix(".bin").read_bytes()
    params = {}
    for entry in meta["params"]:
        raw = blob[entry["offset"] : entry["offset"] + entry["size"]]
        params[entry["name"]] = np.frombuffer(raw, dtype=np.float64).reshape(entry["shape"]).copy()
    network = RoadNetwork(
        roads=tuple(meta["roads"]),
        edges=tuple((a, b, float(w)) for a, b, w in meta["edges"]),
        coordinates={r: (c[0], c[1]) for r, c in meta["coordinates"].items()},
    )
    if meta["graph_hash"] != graph_hash(network):
        raise ValueError("checkpoint graph hash mismatch")
    return ModelState(
        config=ModelConfig.from_dict(meta["config"]),
        network=network,
        norm_mean=np.asarray(meta["norm_mean"], dtype=float),
        norm_std=np.asarray(meta["norm_std"], dtype=float),
        params=params,
        trained=meta["trained"],
        unit=meta["unit"],
        history=meta["history"],
    )

"""On-disk dataset bundles: a filled panel plus its road network."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .types import DataError, RoadNetwork, SpeedPanel
from .synth import GroundTruth


def save_dataset(
    out_dir: str | Path,
    panel: SpeedPanel,
    network: RoadNetwork,
    truth: GroundTruth | None = None,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "panel.json").write_text(
        json.dumps(
            {
                "start": panel.start.astimezone(timezone.utc).isoformat(),
                "roads": list(panel.roads),
                "steps": panel.num_steps,
                "unit": panel.unit,
            },
            sort_keys=True,
            indent=1,
        )
    )
    (out / "panel.bin").write_bytes(np.ascontiguousarray(panel.values, dtype=np.float64).tobytes())
    (out / "mask.bin").write_bytes(np.packbits(panel.mask).tobytes())
    (out / "network.json").write_text(
        json.dumps(
            {
                "roads": list(network.roads),
                "edges": [[a, b, w] for a, b, w in network.edges],
                "coordinates": {r: list(c) for r, c in sorted(network.coordinates.items())},
            },
            sort_keys=True,
            indent=1,
        )
    )
    if truth is not None:
        (out / "truth.json").write_text(
            json.dumps(
                {
                    "cluster_of": truth.cluster_of,
                    "causal_edges": [[a, b, lag] for a, b, lag in truth.causal_edges],
                },
                sort_keys=True,
                indent=1,
            )
        )


def load_dataset(path: str | Path) -> tuple[SpeedPanel, RoadNetwork]:
    root = Path(path)
    if not (root / "panel.json").exists():
        raise DataError(f"{root} is not a dataset directory (no panel.json)")
    meta = json.loads((root / "panel.json").read_text())
    shape = (meta["steps"], len(meta["roads"]))
    values = np.frombuffer((root / "panel.bin").read_bytes(), dtype=np.float64).reshape(shape).copy()
    bits = np.unpackbits(np.frombuffer((root / "mask.bin").read_bytes(), dtype=np.uint8))
    mask = bits[: shape[0] * shape[1]].reshape(shape).astype(bool)
    panel = SpeedPanel(
        start=datetime.fromisoformat(meta["start"]),
        roads=tuple(meta["roads"]),
        values=values,
        mask=mask,
        unit=meta["unit"],
    )
    net = json.loads((root / "network.json").read_text())
    network = RoadNetwork(
        roads=tuple(net["roads"]),
        edges=tuple((a, b, float(w)) for a, b, w in net["edges"]),
        coordinates={r: (c[0], c[1]) for r, c in net["coordinates"].items()},
    )
    return panel, network

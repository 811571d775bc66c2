"""CSV ingestion for speeds, graph edges, and coordinates."""

from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from .types import INTERVAL, ConflictError, DataError, ParseError, RoadNetwork, SpeedPanel


def _parse_timestamp(text: str, line: int) -> datetime:
    try:
        t = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ParseError(f"line {line}: bad timestamp {text!r}: {exc}") from exc
    if t.tzinfo is None:
        t = t.replace(tzinfo=timezone.utc)
    return t.astimezone(timezone.utc)


def _parse_speed(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(f"line {line}: bad speed {text!r}") from exc


def load_speed_csv(path: str | Path, unit: str = "km/h") -> SpeedPanel:
    """Load a `timestamp,road_id,speed` CSV onto a uniform 5-minute grid.

    Timestamps must fall exactly on 5-minute boundaries; grid cells with no
    row are marked missing. Duplicate (timestamp, road) rows must agree.
    """
    readings: dict[tuple[datetime, str], tuple[float, int]] = {}
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file")
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"line {line}: expected 3 columns, got {len(row)}")
            t = _parse_timestamp(row[0].strip(), line)
            road = row[1].strip()
            if not road:
                raise ParseError(f"line {line}: empty road id")
            speed = _parse_speed(row[2].strip(), line)
            if (t.minute % 5, t.second, t.microsecond) != (0, 0, 0):
                raise ParseError(f"line {line}: timestamp {row[0]} not on 5-minute grid")
            key = (t, road)
            if key in readings and readings[key][0] != speed:
                raise ConflictError(
                    f"line {line}: conflicting duplicate for {road} at {t.isoformat()} "
                    f"({readings[key][0]} vs {speed}, first seen line {readings[key][1]})"
                )
            readings[key] = (speed, line)
    if not readings:
        raise DataError(f"{path}: no readings")

    times = sorted({t for t, _ in readings})
    roads = tuple(sorted({r for _, r in readings}))
    start, end = times[0], times[-1]
    steps = int((end - start) / INTERVAL) + 1
    values = np.full((steps, len(roads)), np.nan)
    mask = np.ones((steps, len(roads)), dtype=bool)
    road_idx = {r: i for i, r in enumerate(roads)}
    for (t, road), (speed, _) in readings.items():
        s = int((t - start) / INTERVAL)
        values[s, road_idx[road]] = speed
        mask[s, road_idx[road]] = False
    return SpeedPanel(start=start, roads=roads, values=values, mask=mask, unit=unit)


def aggregate_5min(
    readings: Iterable[tuple[datetime, str, float]], unit: str = "km/h"
) -> SpeedPanel:
    """Aggregate irregular readings to 5-minute cell means.

    Each grid cell is the arithmetic mean of readings in [t, t+5min); cells
    with no readings are missing. Output is invariant under permutation of
    the input (per-cell values are sorted before summing).
    """
    cells: dict[tuple[datetime, str], list[float]] = {}
    for t, road, speed in readings:
        if t.tzinfo is None:
            t = t.replace(tzinfo=timezone.utc)
        t = t.astimezone(timezone.utc)
        floor = t.replace(minute=t.minute - t.minute % 5, second=0, microsecond=0)
        cells.setdefault((floor, road), []).append(float(speed))
    if not cells:
        raise DataError("no readings to aggregate")

    times = sorted({t for t, _ in cells})
    roads = tuple(sorted({r for _, r in cells}))
    start, end = times[0], times[-1]
    steps = int((end - start) / INTERVAL) + 1
    values = np.full((steps, len(roads)), np.nan)
    mask = np.ones((steps, len(roads)), dtype=bool)
    road_idx = {r: i for i, r in enumerate(roads)}
    for (t, road), vals in cells.items():
        s = int((t - start) / INTERVAL)
        ordered = np.sort(np.asarray(vals))
        values[s, road_idx[road]] = ordered.sum() / len(ordered)
        mask[s, road_idx[road]] = False
    return SpeedPanel(start=start, roads=roads, values=values, mask=mask, unit=unit)


def load_graph_csv(path: str | Path, roads: Iterable[str] | None = None) -> list[tuple[str, str, float]]:
    """Load `from_id,to_id,weight` edges; weights must be nonnegative."""
    edges: list[tuple[str, str, float]] = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"line {line}: expected 3 columns, got {len(row)}")
            try:
                w = float(row[2])
            except ValueError as exc:
                raise ParseError(f"line {line}: bad weight {row[2]!r}") from exc
            if w < 0:
                raise ParseError(f"line {line}: negative weight {w}")
            edges.append((row[0].strip(), row[1].strip(), w))
    return edges


def load_coords_csv(path: str | Path) -> dict[str, tuple[float, float]]:
    """Load `road_id,lat,lon` display coordinates."""
    coords: dict[str, tuple[float, float]] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"line {line}: expected 3 columns, got {len(row)}")
            try:
                coords[row[0].strip()] = (float(row[1]), float(row[2]))
            except ValueError as exc:
                raise ParseError(f"line {line}: bad coordinate in {row!r}") from exc
    return coords


def load_network(
    graph_path: str | Path, coords_path: str | Path | None = None, roads: Iterable[str] | None = None
) -> RoadNetwork:
    """Assemble a RoadNetwork from graph and optional coordinate CSVs.

    ``roads`` supplies the node set (e.g. from the speed panel); otherwise
    nodes are inferred from the edges.
    """
    edges = load_graph_csv(graph_path)
    coords = load_coords_csv(coords_path) if coords_path else {}
    if roads is None:
        names = sorted({a for a, _, _ in edges} | {b for _, b, _ in edges})
    else:
        names = list(roads)
    return RoadNetwork(roads=tuple(names), edges=tuple(edges), coordinates=coords)

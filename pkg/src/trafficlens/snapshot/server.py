"""HTTP JSON API over an immutable snapshot.

Every GET is a pure function of (snapshot, query); enforcement what-ifs run
as jobs in a bounded worker pool and never mutate the snapshot. Attention
for a (road, timestamp) pair is computed on demand and cached per window.
"""

from __future__ import annotations

import itertools
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..data.types import DataError
from ..deps.granger import causality_scan
from ..enforce import build_plan, run_alternative_inference
from ..errors import HORIZONS_MIN, format_ae_std, speed_histogram, windowed_ae
from ..model.attention import compose_st, extract_attention
from ..views import attn_arrows
from .build import Snapshot


def _bad(detail: str) -> HTTPException:
    return HTTPException(status_code=400, detail={"error": detail})


def _missing(detail: str) -> HTTPException:
    return HTTPException(status_code=404, detail={"error": detail})


def _parse_time(text: str) -> datetime:
    try:
        return datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise _bad(f"bad timestamp {text!r}; expected ISO-8601")


class EnforceRequest(BaseModel):
    clusters: list[int]
    k: int = Field(default=3, ge=1)
    alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    head_average: bool = False


def create_app(snapshot: Snapshot, workers: int = 2, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="trafficlens snapshot API")
    executor = ThreadPoolExecutor(max_workers=workers)
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()
    job_counter = itertools.count(1)
    bundle_cache: dict[int, object] = {}
    causality_cache: dict[str, list] = {}

    test_panel = snapshot.test_panel
    roads = snapshot.panel.roads

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    @app.exception_handler(DataError)
    async def on_data_error(request: Request, exc: DataError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def _road_or_404(road_id: str) -> str:
        if road_id not in snapshot.network.index:
            raise _missing(f"unknown road {road_id!r}")
        return road_id

    def _bundle(start_step: int):
        if start_step not in bundle_cache:
            if len(bundle_cache) > 128:
                bundle_cache.clear()
            bundle_cache[start_step] = extract_attention(snapshot.state, test_panel, start_step)
        return bundle_cache[start_step]

    @app.get("/snapshot")
    def get_snapshot():
        m = snapshot.manifest
        return {
            "id": m["id"],
            "dataset": m["dataset"],
            "version": m["version"],
            "date_range": m["date_range"],
            "test_range": m["test_range"],
            "horizons": list(HORIZONS_MIN),
            "horizon_default": m["horizon_default"],
            "q1": m["q1"],
            "q3": m["q3"],
            "k": m["k"],
            "unit": m["unit"],
            "interval_minutes": 5,
            "roads_count": len(roads),
            "speed_range": {
                "min": float(np.nanmin(snapshot.panel.values)),
                "max": float(np.nanmax(snapshot.panel.values)),
            },
            "mae_range": {
                "min": float(np.nanmin(snapshot.errors.mae)),
                "max": float(np.nanmax(snapshot.errors.mae)),
            },
        }

    @app.get("/roads")
    def get_roads():
        errors = snapshot.errors
        clusters = snapshot.clusters
        cohorts = snapshot.cohorts
        out = []
        for j, road in enumerate(roads):
            bins, std = speed_histogram(snapshot.panel, road)
            lat, lon = snapshot.network.coordinates.get(road, (None, None))
            mae = {
                str(h): (None if np.isnan(errors.mae[j, hi]) else float(errors.mae[j, hi]))
                for hi, h in enumerate(errors.horizons)
            }
            out.append(
                {
                    "id": road,
                    "lat": lat,
                    "lon": lon,
                    "cluster": clusters.label[road],
                    "mae": mae,
                    "avg_mae": None if road in errors.excluded else errors.average_mae(road),
                    "std": std,
                    "mean_speed": float(snapshot.panel.values[:, j].mean()),
                    "histogram": bins,
                    "cohort": "low" if road in cohorts.low else "high" if road in cohorts.high else "mid",
                }
            )
        return out

    @app.get("/speeds")
    def get_speeds(t: str):
        cursor = _parse_time(t)
        try:
            step = test_panel.step_at(cursor)
        except DataError as exc:
            raise _missing(str(exc))
        return {
            "t": cursor.isoformat(),
            "speeds": {road: float(test_panel.values[step, j]) for j, road in enumerate(roads)},
        }

    @app.get("/roads/{road_id}/trend")
    def get_trend(road_id: str):
        _road_or_404(road_id)
        return {"road": road_id, **snapshot.trends[road_id]}

    # `from` is a reserved word, so the series route reads its own query params.
    @app.get("/roads/{road_id}/series")
    def get_series(road_id: str, request: Request, horizon: int = 15):
        _road_or_404(road_id)
        if horizon not in HORIZONS_MIN:
            raise _bad(f"horizon must be one of {list(HORIZONS_MIN)}")
        q = request.query_params
        begin = _parse_time(q["from"]) if "from" in q else test_panel.start
        end = _parse_time(q["to"]) if "to" in q else test_panel.end
        try:
            b = test_panel.step_at(begin)
        except DataError:
            raise _missing(f"timestamp {begin.isoformat()} outside or off the test grid")
        e = int(min((end - test_panel.start) / test_panel.interval, test_panel.num_steps))
        if e <= b:
            raise _bad("empty series range")
        j = test_panel.road_index[road_id]
        predicted = snapshot.predictions.horizon_series(test_panel.num_steps, horizon)[:, j]
        body = {
            "road": road_id,
            "start": test_panel.time_at(b).isoformat(),
            "interval_minutes": 5,
            "horizon": horizon,
            "actual": test_panel.values[b:e, j].tolist(),
            "predicted": [None if np.isnan(v) else float(v) for v in predicted[b:e]],
        }
        if "cursor" in q:
            cursor = _parse_time(q["cursor"])
            try:
                step = test_panel.step_at(cursor)
                ae, std = windowed_ae(road_id, step, snapshot.predictions, test_panel, horizon)
            except (DataError, ValueError) as exc:
                raise _missing(str(exc))
            body["cursor"] = {"t": cursor.isoformat(), "ae": ae, "std": std, "display": format_ae_std(ae, std)}
        return body

    @app.get("/roads/{road_id}/attention")
    def get_attention(
        road_id: str,
        t: str,
        horizon: int = 15,
        head: int | None = None,
        threshold: float = 0.1,
    ):
        _road_or_404(road_id)
        if horizon not in HORIZONS_MIN:
            raise _bad(f"horizon must be one of {list(HORIZONS_MIN)}")
        cursor = _parse_time(t)
        try:
            step = test_panel.step_at(cursor)
        except DataError as exc:
            raise _missing(str(exc))
        start = step - 12
        if start < 0 or step + 12 > test_panel.num_steps:
            raise _missing(f"timestamp {cursor.isoformat()} lacks a 12-step history and horizon")
        try:
            st = compose_st(_bundle(start), road_id, horizon, head)
        except ValueError as exc:
            raise _bad(str(exc))
        return {"st": st.to_dict(), "arrows": attn_arrows(st, threshold).to_dict()}

    @app.get("/roads/{road_id}/causality")
    def get_causality(road_id: str):
        _road_or_404(road_id)
        if road_id not in causality_cache:
            series = {r: test_panel.series(r) for r in roads}
            results = causality_scan(road_id, [r for r in roads if r != road_id], series)
            causality_cache[road_id] = [r.to_dict() for r in results]
        return {"target": road_id, "results": causality_cache[road_id]}

    @app.get("/clusters")
    def get_clusters():
        doc = snapshot.clusters.to_dict()
        doc["suggested_k"] = snapshot.manifest["suggested_k"]
        return doc

    @app.get("/headclusters")
    def get_headclusters(scale: str = "global"):
        if scale not in ("global", "local"):
            raise _bad("scale must be 'global' or 'local'")
        return snapshot.headclusters[scale]

    @app.post("/enforce", status_code=202)
    def post_enforce(req: EnforceRequest):
        if not req.clusters:
            raise _bad("clusters must be non-empty")
        known = set(snapshot.clusters.label.values())
        unknown = [c for c in req.clusters if c not in known]
        if unknown:
            raise _bad(f"unknown clusters {unknown}")
        with jobs_lock:
            job_id = f"job-{next(job_counter):06d}"
            jobs[job_id] = {"status": "queued", "request": req.model_dump()}

        def run() -> None:
            jobs[job_id]["status"] = "running"
            try:
                plan = build_plan(
                    snapshot.errors,
                    snapshot.cohorts,
                    snapshot.clusters,
                    snapshot.distance,
                    snapshot.panel,
                    selected=req.clusters,
                    k=req.k,
                    alpha=req.alpha,
                    head_average=req.head_average,
                    horizon=snapshot.manifest["horizon_default"],
                )
                report = run_alternative_inference(snapshot.state, plan, test_panel)
                jobs[job_id].update(status="done", report=report.to_dict())
            except Exception as exc:  # job failures surface via status
                jobs[job_id].update(status="failed", error=str(exc))

        executor.submit(run)
        return {"job_id": job_id}

    @app.get("/enforce/{job_id}")
    def get_job(job_id: str):
        if job_id not in jobs:
            raise _missing(f"unknown job {job_id!r}")
        return jobs[job_id]

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app

from .types import RoadNetwork, SpeedPanel, SplitSpec, TrendVector
from .io import load_speed_csv, load_graph_csv, load_coords_csv, aggregate_5min
from .preprocess import fill_missing, chronological_split, daily_trend
from .synth import SynthConfig, GroundTruth, synth_generate

__all__ = [
    "RoadNetwork",
    "SpeedPanel",
    "SplitSpec",
    "TrendVector",
    "load_speed_csv",
    "load_graph_csv",
    "load_coords_csv",
    "aggregate_5min",
    "fill_missing",
    "chronological_split",
    "daily_trend",
    "SynthConfig",
    "GroundTruth",
    "synth_generate",
]

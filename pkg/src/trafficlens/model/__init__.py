from .config import ModelConfig
from .state import ModelState, load_checkpoint, save_checkpoint
from .training import build_windows, historical_average_mae, predict, train
from .attention import AttentionBundle, STMatrix, extract_attention, extract_st_attention

__all__ = [
    "ModelConfig",
    "ModelState",
    "load_checkpoint",
    "save_checkpoint",
    "build_windows",
    "historical_average_mae",
    "predict",
    "train",
    "AttentionBundle",
    "STMatrix",
    "extract_attention",
    "extract_st_attention",
]

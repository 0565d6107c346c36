from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .deepsets import DeepSets, DeepSetsConfig
from .gesn import Gesn, GesnConfig, HonestStrategy, InfoSetting, Normalization, strategize_many
from .gevn import Gevn, GevnConfig
from .graph import ElectionGraph, GraphBatch, build_ebg
from .smith import truncate_to_smith

__all__ = [
    "CheckpointError",
    "DeepSets",
    "DeepSetsConfig",
    "ElectionGraph",
    "Gesn",
    "GesnConfig",
    "Gevn",
    "GevnConfig",
    "GraphBatch",
    "HonestStrategy",
    "InfoSetting",
    "Normalization",
    "build_ebg",
    "load_checkpoint",
    "save_checkpoint",
    "strategize_many",
    "truncate_to_smith",
]

"""Pseudo event boundaries for ordered captions from frame-caption similarity."""

__version__ = "0.1.0"

from .boundary_gen import GenConfig, generate, generate_global, generate_uniform
from .core import Boundary, BoundarySet, InvariantError, Timeline, giou, iou, uniform_init
from .dropdtw import DropDtwConfig, drop_dtw_align, dropdtw_boundaries
from .eval import EvalReport, benchmark, evaluate, pr_at_threshold
from .refine import OracleScorer, RefineConfig, hungarian, refine
from .simatrix import EmbeddingSet, SimilarityMatrix, SynthConfig, aggregate, build_matrix, synth_matrix

__all__ = [
    "Boundary", "BoundarySet", "DropDtwConfig", "EmbeddingSet", "EvalReport", "GenConfig",
    "InvariantError", "OracleScorer", "RefineConfig", "SimilarityMatrix", "SynthConfig", "Timeline",
    "aggregate", "benchmark", "build_matrix", "drop_dtw_align", "dropdtw_boundaries", "evaluate",
    "generate", "generate_global", "generate_uniform", "giou", "hungarian", "iou", "pr_at_threshold",
    "refine", "synth_matrix", "uniform_init",
]

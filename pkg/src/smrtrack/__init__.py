"""Template tracking with the similarity matching ratio.

The SMR score sums exp(-|difference|) over pixels whose difference stays
under a dynamic threshold, so outlying pixels never vote.  The package
bundles the tracker itself, a sum-of-absolute-differences baseline on the
identical search machinery, an evaluation harness, and a deterministic
synthetic-sequence generator for fixtures.
"""

from .errors import (
    ConfigError,
    DecodeError,
    DimensionError,
    FormatError,
    OutOfBoundsError,
    SpecError,
    TrackError,
)
from .evaluation import ComparisonTable, EvalReport, GroundTruth, compare, evaluate, iou
from .imaging import (
    BBox,
    GrayFrame,
    decode_pgm,
    decode_png,
    encode_pgm,
    extract_patch,
    load_sequence,
    pad_frame,
    to_grayscale,
)
from .kernels import BACKEND
from .matching import (
    METRIC_SAD,
    METRIC_SMR,
    ScoreMap,
    Template,
    diff_histogram,
    diff_map,
    dynamic_alpha,
    sad_score,
    search,
    smr_score,
)
from .tracker import TrackerConfig, TrackerState, TrackResult, init, step, track_sequence

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BBox",
    "ComparisonTable",
    "ConfigError",
    "DecodeError",
    "DimensionError",
    "EvalReport",
    "FormatError",
    "GrayFrame",
    "GroundTruth",
    "METRIC_SAD",
    "METRIC_SMR",
    "OutOfBoundsError",
    "ScoreMap",
    "SpecError",
    "Template",
    "TrackError",
    "TrackResult",
    "TrackerConfig",
    "TrackerState",
    "compare",
    "decode_pgm",
    "decode_png",
    "diff_histogram",
    "diff_map",
    "dynamic_alpha",
    "encode_pgm",
    "evaluate",
    "extract_patch",
    "init",
    "iou",
    "load_sequence",
    "pad_frame",
    "sad_score",
    "search",
    "smr_score",
    "step",
    "to_grayscale",
    "track_sequence",
]

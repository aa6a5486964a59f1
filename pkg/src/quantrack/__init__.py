"""Streaming multi-quantile tracking toolkit.

Incremental single-quantile estimators (``Dumiqe``, ``Qewa``), joint
monotone multi-quantile trackers (``ShiftQ``, ``CondQ``), synthetic
dynamic-stream benchmarks with analytic quantile oracles, and an online
quantile-distance change detector for accelerometer-style streams.
"""

from .estimators import Dumiqe, Qewa
from .trackers import (
    CondQ,
    Mdumiqe,
    ParallelDumiqe,
    QuantileGrid,
    ShiftQ,
    warmup_init,
)
from .streams import (
    StreamConfig,
    StreamGenerator,
    TrueQuantileOracle,
    chisquare_quantile,
    normal_quantile,
    param_at,
    static_samples,
)

__version__ = "0.1.0"

__all__ = [
    "Dumiqe",
    "Qewa",
    "QuantileGrid",
    "ShiftQ",
    "CondQ",
    "Mdumiqe",
    "ParallelDumiqe",
    "warmup_init",
    "StreamConfig",
    "StreamGenerator",
    "TrueQuantileOracle",
    "param_at",
    "normal_quantile",
    "chisquare_quantile",
    "static_samples",
    "__version__",
]

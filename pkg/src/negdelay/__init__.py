"""Numerical laboratory for photon excitation times in a resonant cloud.

Propagates pulses through a Lorentzian absorber, computes conditional
(post-selected) excitation traces two independent ways, simulates the
click/no-click cross-phase experiment shot by shot, and runs the full
statistical pipeline from raw shots to excitation-time ratios.
"""

__version__ = "0.1.0"

from .backend import backend_name
from .errors import (
    AnalysisError,
    ConfigError,
    ConvergenceError,
    GridError,
    NegdelayError,
    PostSelectionError,
)
from .medium import MediumSpec, StarkParams
from .pulse import PulseSpec, SampledSignal

__all__ = [
    "__version__",
    "backend_name",
    "NegdelayError",
    "ConfigError",
    "GridError",
    "ConvergenceError",
    "AnalysisError",
    "PostSelectionError",
    "MediumSpec",
    "StarkParams",
    "PulseSpec",
    "SampledSignal",
]

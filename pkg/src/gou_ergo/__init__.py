"""Generalized Ornstein-Uhlenbeck processes dV = V_- dU + dL: simulation,
generator evaluation, ergodicity classification and Monte Carlo diagnostics."""

__version__ = "0.1.0"

from .classifier import ErgodicityReport, classify, rate_bound
from .fixtures import fixture, fixtures
from .levy_model import Atom, JumpMeasure, LevyTriplet2D, ProcessSpec, load_spec, spec_from_dict
from .lyapunov import LyapunovFn, parse_lyapunov

__all__ = [
    "Atom", "JumpMeasure", "LevyTriplet2D", "ProcessSpec", "load_spec", "spec_from_dict",
    "LyapunovFn", "parse_lyapunov", "ErgodicityReport", "classify", "rate_bound",
    "fixture", "fixtures", "__version__",
]

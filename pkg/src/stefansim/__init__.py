"""Simulator and verification suite for reflected stochastic moving-boundary systems."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    CoefficientSet,
    NoiseField,
    Profile,
    SpaceTimeGrid,
    TruncationMap,
    apply_truncation,
    h_norm,
    preset_coefficients,
    sample_noise,
)

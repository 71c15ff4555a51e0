"""Grids, boundary-anchored profiles, coefficient presets and the seedable noise field.

Everything here is immutable after construction and safe to share across
threads; noise sampling is a pure function of (seed, stream_id, step, side).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SpaceTimeGrid",
    "Profile",
    "NoiseField",
    "CoefficientSet",
    "TruncationMap",
    "h_norm",
    "h_norm_values",
    "apply_truncation",
    "truncate_values",
    "sample_noise",
    "tent",
    "preset_coefficients",
    "validate_coefficients",
    "CoefficientWarning",
    "PRESET_NAMES",
]

_U64 = (1 << 64) - 1


class CoefficientWarning(UserWarning):
    """Coefficient set falls outside the linear-decay theory."""


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform grid: N space intervals on [0,1], M time steps on [0,T]."""

    N: int
    M: int
    T: float

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not (self.T > 0):
            raise ValueError(f"T must be positive, got {self.T}")

    @property
    def dx(self) -> float:
        return 1.0 / self.N

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def stability_ratio(self) -> float:
        """dt/dx^2 = T*N^2/M; the explicit scheme requires <= 1/2."""
        return self.T * self.N * self.N / self.M

    def xs(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)

    def ts(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M + 1)


def h_norm_values(values: np.ndarray) -> float:
    """sup over grid nodes x_i > 0 of |v_i / x_i| for a node-value vector."""
    v = np.asarray(values, dtype=float)
    n = v.shape[-1] - 1
    i = np.arange(1, n + 1, dtype=float)
    return float(np.max(np.abs(v[..., 1:]) * (n / i), axis=-1))


@dataclass(frozen=True)
class Profile:
    """Node values of a function on [0,1] vanishing at both endpoints."""

    values: np.ndarray
    grid: SpaceTimeGrid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N + 1,):
            raise ValueError(f"expected {self.grid.N + 1} node values, got shape {v.shape}")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("profile must vanish at both endpoints")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], grid: SpaceTimeGrid) -> "Profile":
        v = np.asarray(fn(grid.xs()), dtype=float).copy()
        v[0] = 0.0
        v[-1] = 0.0
        return cls(v, grid)

    @classmethod
    def zeros(cls, grid: SpaceTimeGrid) -> "Profile":
        return cls(np.zeros(grid.N + 1), grid)

    def h_norm(self) -> float:
        return h_norm_values(self.values)


def h_norm(p: Profile) -> float:
    """Discrete boundary-anchored sup norm, max_i |v_i/x_i|."""
    return p.h_norm()


@dataclass(frozen=True)
class TruncationMap:
    """Clip the ratio v(x)/x from above at a fixed level."""

    level: float

    def __post_init__(self):
        if not (self.level > 0):
            raise ValueError(f"truncation level must be positive, got {self.level}")


def truncate_values(values: np.ndarray, level: float) -> np.ndarray:
    """x_i * min(v_i/x_i, level) nodewise; equals min(v_i, level*x_i) for x_i > 0."""
    v = np.asarray(values, dtype=float)
    n = v.shape[-1] - 1
    x = np.linspace(0.0, 1.0, n + 1)
    out = np.minimum(v, level * x)
    out[..., 0] = 0.0
    return out


def apply_truncation(p: Profile, f: TruncationMap) -> Profile:
    return Profile(truncate_values(p.values, f.level), p.grid)


@dataclass(frozen=True)
class NoiseField:
    """Counter-based white-noise increments, addressable by (step, node, side).

    Any row of variates is regenerated on demand from a Philox key built from
    (seed, stream_id) and a counter built from (step, side), so identical
    coordinates give bit-identical values regardless of evaluation order or
    thread schedule.
    """

    grid: SpaceTimeGrid
    seed: int
    stream_id: int = 0

    def _key(self) -> int:
        return ((self.stream_id & _U64) << 64) | (self.seed & _U64)

    def normals(self, j: int, side: int) -> np.ndarray:
        """Unit normals Z_{i,j} for one time step and one side, length N+1."""
        if not 0 <= j < self.grid.M:
            raise IndexError(f"time step {j} out of range [0, {self.grid.M})")
        if side not in (1, 2):
            raise ValueError(f"side must be 1 or 2, got {side}")
        row = 2 * j + (side - 1)
        bitgen = np.random.Philox(key=self._key(), counter=row << 128)
        return np.random.Generator(bitgen).standard_normal(self.grid.N + 1)


def sample_noise(nf: NoiseField, j: int, side: int) -> np.ndarray:
    return nf.normals(j, side)


def tent(x: np.ndarray) -> np.ndarray:
    """Piecewise-linear initial profile: 0 at the endpoints, 1 at x=0.5."""
    return 1.0 - np.abs(2.0 * np.asarray(x, dtype=float) - 1.0)


def _sigma_a(x, t, u):
    # linear between (0,0), (0.5,1), (1,1)
    return np.minimum(2.0 * np.asarray(x, dtype=float), 1.0)


def _sigma_b(x, t, u):
    return np.asarray(u, dtype=float)


def _sigma_c(x, t, u):
    return np.sqrt(np.asarray(x, dtype=float))


def _f_one(x, t, u):
    return np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class CoefficientSet:
    """Problem data: drifts, volatilities, boundary functional and initial data.

    Drift/volatility callables are vectorised over interior nodes with
    signature (x, t, u) -> array, where u holds the profile values at x
    (already clipped when truncation_M is set).  The boundary speed is the
    classical gamma * (dv1/dx(0) - dv2/dx(0)) unless a custom ``h`` callable
    (v1_values, v2_values, grid) -> float is supplied.
    """

    f1: Callable = _f_one
    f2: Callable = _f_one
    sigma1: Callable = _sigma_a
    sigma2: Callable = _sigma_a
    gamma: float = 10.0
    h: Optional[Callable] = None
    u0_1: Callable[[np.ndarray], np.ndarray] = tent
    u0_2: Callable[[np.ndarray], np.ndarray] = tent
    truncation_M: Optional[float] = None
    outside_theory: bool = False
    name: str = "custom"

    def __post_init__(self):
        if self.h is None and not (self.gamma >= 0):
            raise ValueError("gamma must be nonnegative for the classical boundary functional")
        if self.truncation_M is not None and not (self.truncation_M > 0):
            raise ValueError("truncation_M must be positive when set")

    def initial_profiles(self, grid: SpaceTimeGrid) -> tuple[Profile, Profile]:
        return (Profile.from_function(self.u0_1, grid), Profile.from_function(self.u0_2, grid))

    def boundary_speed(self, v1: np.ndarray, v2: np.ndarray, grid: SpaceTimeGrid) -> float:
        """h(v1, v2); first-node derivative N*v[1] for the classical form."""
        if self.truncation_M is not None:
            v1 = truncate_values(v1, self.truncation_M)
            v2 = truncate_values(v2, self.truncation_M)
        if self.h is not None:
            return float(self.h(v1, v2, grid))
        return self.gamma * grid.N * (float(v1[1]) - float(v2[1]))


PRESET_NAMES = ("sigma_a", "sigma_b", "sigma_c")

_PRESET_SIGMA = {"sigma_a": _sigma_a, "sigma_b": _sigma_b, "sigma_c": _sigma_c}


def preset_coefficients(name: str, gamma: float = 10.0,
                        f_scale1: float = 1.0, f_scale2: float = 1.0,
                        truncation_M: Optional[float] = None) -> CoefficientSet:
    """The three benchmark coefficient sets: f = 1, gamma = 10, tent initial data.

    sigma_a(x) decays linearly at the boundary, sigma_b(u) = u is
    multiplicative, sigma_c(x) = sqrt(x) deliberately violates the
    linear-decay condition and is flagged outside_theory.
    """
    if name not in _PRESET_SIGMA:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    sig = _PRESET_SIGMA[name]

    def f1(x, t, u, _s=f_scale1):
        return _s * np.ones_like(np.asarray(x, dtype=float))

    def f2(x, t, u, _s=f_scale2):
        return _s * np.ones_like(np.asarray(x, dtype=float))

    return CoefficientSet(
        f1=f1, f2=f2, sigma1=sig, sigma2=sig, gamma=gamma,
        u0_1=tent, u0_2=tent, truncation_M=truncation_M,
        outside_theory=(name == "sigma_c"), name=name,
    )


def validate_coefficients(coeffs: CoefficientSet, grid: SpaceTimeGrid,
                          decay_constant: float = 8.0) -> list[str]:
    """Numerically check the linear-decay condition |sigma(x,t,0)| <= C*x.

    Returns a list of warning strings; an outside-theory set passes through
    with a warning rather than an error.
    """
    x = grid.xs()[1:-1]
    zero = np.zeros_like(x)
    warnings = []
    for label, sig in (("sigma1", coeffs.sigma1), ("sigma2", coeffs.sigma2)):
        ratio = np.max(np.abs(np.asarray(sig(x, 0.0, zero), dtype=float)) / x)
        if ratio > decay_constant:
            warnings.append(
                f"{label} violates the linear-decay condition |sigma(x,t,0)| <= C*x "
                f"(observed ratio {ratio:.3g} > {decay_constant:g}); "
                "profiles may lack a boundary derivative"
            )
    return warnings

"""Explicit finite-difference integrator for the coupled reflected system.

Works in the frame anchored to the shared boundary, so both phases live on
[0,1] with Dirichlet zeros.  Each step adds the diffusion stencil, the
boundary-driven transport term, drift and scaled white-noise increments, then
takes the absolute value; the jump applied by the reflection is recorded as
the discrete reflection increment 2*|pre-value|*dx.  The boundary path is
reconstructed by accumulating the boundary functional of the updated rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    CoefficientSet,
    NoiseField,
    Profile,
    SpaceTimeGrid,
    h_norm_values,
    truncate_values,
)

__all__ = [
    "SimulationResult",
    "BlowupInfo",
    "StabilityError",
    "step",
    "run",
    "monitor_blowup",
    "STABILITY_LIMIT",
]

STABILITY_LIMIT = 0.5  # explicit heat stencil: T*N^2/M <= 1/2


class StabilityError(ValueError):
    """Grid violates the explicit-scheme stability gate."""


@dataclass(frozen=True)
class BlowupInfo:
    time_index: int
    side: int
    h_norm_at_trip: float
    reason: str  # "nonfinite" or "norm_abort"


@dataclass
class SimulationResult:
    """Trajectory of both phases with reflection increments and boundary path.

    On early halt the arrays stop at the last well-formed row and ``blowup``
    records the trip; otherwise they span all M+1 time slices.
    """

    grid: SpaceTimeGrid
    v1: np.ndarray
    v2: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    p: np.ndarray
    boundary_speed: np.ndarray
    blowup: Optional[BlowupInfo]
    seed: int
    stream_id: int
    preset: str = "custom"

    @property
    def steps_completed(self) -> int:
        return self.v1.shape[0] - 1


def _check_stability(grid: SpaceTimeGrid):
    if grid.stability_ratio > STABILITY_LIMIT + 1e-12:
        raise StabilityError(
            f"stability ratio T*N^2/M = {grid.stability_ratio:.4g} exceeds {STABILITY_LIMIT}; "
            "increase M or decrease N")


def _transport_diff(a: np.ndarray, speed_coeff: float, upwind: bool, sign: float,
                    N: int) -> np.ndarray:
    """Discrete N*(gradient) of the transported profile on interior nodes.

    Default is the one-sided forward difference for both sides; the optional
    upwind mode picks the difference direction from the sign of the advection
    velocity (sign * speed for the equation dv/dt = ... - sign*speed*dv/dx).
    """
    if not upwind:
        return N * (a[2:] - a[1:-1])
    vel = sign * speed_coeff  # advection coefficient in v_t + vel*v_x = ...
    backward = N * (a[1:-1] - a[:-2])
    forward = N * (a[2:] - a[1:-1])
    return backward if vel > 0 else forward


def _step_values(v1: np.ndarray, v2: np.ndarray, z1: np.ndarray, z2: np.ndarray,
                 t: float, coeffs: CoefficientSet, grid: SpaceTimeGrid,
                 upwind: bool = False):
    """One explicit update of both sides; returns (new1, new2, eta1, eta2, speed)."""
    N = grid.N
    dt = grid.dt
    lam = dt * N * N
    rho = np.sqrt(dt * N)
    dx = grid.dx
    xi = grid.xs()[1:-1]

    trunc = coeffs.truncation_M
    a1 = truncate_values(v1, trunc) if trunc is not None else v1
    a2 = truncate_values(v2, trunc) if trunc is not None else v2
    speed = coeffs.boundary_speed(v1, v2, grid)

    new = np.zeros((2, N + 1))
    eta = np.zeros((2, N + 1))
    for k, (v, a, z, sgn, f, sig) in enumerate((
            (v1, a1, z1, 1.0, coeffs.f1, coeffs.sigma1),
            (v2, a2, z2, -1.0, coeffs.f2, coeffs.sigma2))):
        lap = v[:-2] + v[2:] - 2.0 * v[1:-1]
        grad = _transport_diff(a, speed, upwind, sgn, N)
        pre = (v[1:-1] + lam * lap - sgn * dt * speed * grad
               + dt * np.asarray(f(xi, t, a[1:-1]), dtype=float)
               + rho * np.asarray(sig(xi, t, a[1:-1]), dtype=float) * z[1:-1])
        new[k, 1:-1] = np.abs(pre)
        eta[k, 1:-1] = np.where(pre < 0.0, -2.0 * pre * dx, 0.0)
    return new[0], new[1], eta[0], eta[1], speed


def step(v1_j: Profile, v2_j: Profile, nf: NoiseField, j: int,
         coeffs: CoefficientSet, grid: SpaceTimeGrid,
         upwind: bool = False):
    """Advance one time step; returns (v1, v2, eta1, eta2) with eta in measure units."""
    _check_stability(grid)
    z1 = nf.normals(j, 1)
    z2 = nf.normals(j, 2)
    n1, n2, e1, e2, _ = _step_values(v1_j.values, v2_j.values, z1, z2,
                                     j * grid.dt, coeffs, grid, upwind)
    return Profile(n1, grid), Profile(n2, grid), e1, e2


def run(coeffs: CoefficientSet, grid: SpaceTimeGrid, nf: NoiseField,
        upwind: bool = False, abort_norm: Optional[float] = None,
        p0: float = 0.0) -> SimulationResult:
    """Integrate the coupled system over the full grid.

    Halts early (stamping ``blowup``) on any non-finite cell or, when
    ``abort_norm`` is set, once the combined boundary-anchored norm of the two
    profiles reaches that level.
    """
    _check_stability(grid)
    M, N = grid.M, grid.N
    dt = grid.dt

    p1, p2 = coeffs.initial_profiles(grid)
    v1 = np.zeros((M + 1, N + 1))
    v2 = np.zeros((M + 1, N + 1))
    eta1 = np.zeros((M + 1, N + 1))
    eta2 = np.zeros((M + 1, N + 1))
    p = np.zeros(M + 1)
    speeds = np.zeros(M + 1)
    v1[0] = p1.values
    v2[0] = p2.values
    p[0] = p0
    speeds[0] = coeffs.boundary_speed(v1[0], v2[0], grid)

    blow: Optional[BlowupInfo] = None
    end = M
    for j in range(M):
        z1 = nf.normals(j, 1)
        z2 = nf.normals(j, 2)
        n1, n2, e1, e2, _ = _step_values(v1[j], v2[j], z1, z2, j * dt, coeffs, grid, upwind)
        if not (np.all(np.isfinite(n1)) and np.all(np.isfinite(n2))):
            side = 1 if not np.all(np.isfinite(n1)) else 2
            tripped = h_norm_values(np.nan_to_num(n1 if side == 1 else n2,
                                                  posinf=np.inf, neginf=np.inf))
            blow = BlowupInfo(j + 1, side, float(tripped), "nonfinite")
            end = j
            break
        v1[j + 1] = n1
        v2[j + 1] = n2
        eta1[j + 1] = e1
        eta2[j + 1] = e2
        speeds[j + 1] = coeffs.boundary_speed(n1, n2, grid)
        p[j + 1] = p[j] + dt * speeds[j + 1]
        if abort_norm is not None:
            h1 = h_norm_values(n1)
            h2 = h_norm_values(n2)
            if h1 + h2 >= abort_norm:
                side = 1 if h1 >= h2 else 2
                blow = BlowupInfo(j + 1, side, float(max(h1, h2)), "norm_abort")
                end = j + 1
                break

    sl = slice(0, end + 1)
    return SimulationResult(
        grid=grid, v1=v1[sl], v2=v2[sl], eta1=eta1[sl], eta2=eta2[sl],
        p=p[sl], boundary_speed=speeds[sl], blowup=blow,
        seed=nf.seed, stream_id=nf.stream_id, preset=coeffs.name,
    )


def monitor_blowup(result: SimulationResult, M_levels: Sequence[float]) -> list[dict]:
    """First-exceedance table: per level, the first time index where the
    combined profile norm reaches the level and the first where the boundary
    speed magnitude does (None where never reached)."""
    norms = np.array([h_norm_values(result.v1[j]) + h_norm_values(result.v2[j])
                      for j in range(result.v1.shape[0])])
    speed = np.abs(result.boundary_speed)
    rows = []
    for level in M_levels:
        ni = np.nonzero(norms >= level)[0]
        si = np.nonzero(speed >= level)[0]
        rows.append({
            "level": float(level),
            "norm_index": int(ni[0]) if ni.size else None,
            "speed_index": int(si[0]) if si.size else None,
        })
    return rows

"""Peaked trial fields and the diagnostics of the concentration regime.

Everything here measures what the semiclassical limit predicts for
low-energy solutions: a single rescaled copy of the radial ground state,
localized at one torus point, whose electrostatic potential becomes
uniformly small and whose normalized p-mass sits inside a fixed ball
around the maximum.
The constant solution branch lives here too since its energy separates it
from the concentrating branch as epsilon shrinks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import bopp_podolsky as bp
from .errors import BarycenterUndefinedError, ParameterError
from .ground_state import RadialProfile, evaluate
from .grid import (
    ScalarField,
    TorusGrid,
    gradient_fields,
    laplacian_field,
)
from .nehari import NehariProjection, SystemParams, project_nehari

__all__ = [
    "PeakSpec",
    "default_cutoff_radius",
    "torus_distance_grid",
    "ProfileDiagnostics",
    "build_peak",
    "psi_map",
    "barycenter",
    "max_point",
    "concentration_ratio",
    "profile_error",
    "constant_branch",
    "phi_smallness",
    "diagnose",
]

DEFAULT_CUTOFF_FRACTION = 0.25  # cutoff radius r = L/4 unless specified


def default_cutoff_radius(period_length: float, epsilon: float) -> float:
    """L/4 when that resolves the peak, else the smallest admissible radius.

    The peak-resolution constraint is epsilon <= r/4 and the torus allows
    r <= L/2, so epsilon beyond L/8 has no admissible cutoff at all.
    """
    r = max(DEFAULT_CUTOFF_FRACTION * period_length, 4.0 * epsilon)
    if r > period_length / 2.0:
        raise ParameterError(
            f"epsilon {epsilon} too large for period {period_length}: "
            "no cutoff radius resolves the peak inside the half-period"
        )
    return r


@dataclass(frozen=True)
class PeakSpec:
    """Where and how concentrated a trial peak is."""

    center: tuple[float, float, float]
    epsilon: float
    cutoff_radius: float

    def __post_init__(self):
        if len(self.center) != 3:
            raise ParameterError("peak center must be a 3-tuple")
        if not (self.epsilon > 0):
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon}")
        if not (self.cutoff_radius > 0):
            raise ParameterError("cutoff radius must be > 0")
        if self.epsilon > self.cutoff_radius / 4.0:
            raise ParameterError(
                f"peak unresolved: epsilon {self.epsilon} > cutoff/4 "
                f"= {self.cutoff_radius / 4.0}"
            )


@dataclass(frozen=True)
class ProfileDiagnostics:
    """Shape measurements of one candidate solution."""

    max_point: tuple[float, float, float]
    max_value: float
    n_local_maxima: int
    barycenter: tuple[float, float, float] | None
    concentration_ratio: float
    sup_profile_error: float
    phi_c2: float

    def to_json(self) -> str:
        payload = {
            "max_point": list(self.max_point),
            "max_value": self.max_value,
            "n_local_maxima": self.n_local_maxima,
            "barycenter": None if self.barycenter is None else list(self.barycenter),
            "concentration_ratio": self.concentration_ratio,
            "profile_error": self.sup_profile_error,
            "phi_c2": self.phi_c2,
        }
        return json.dumps(payload)


def torus_distance_grid(grid: TorusGrid, center) -> np.ndarray:
    """Distance to ``center`` in the flat torus metric, sampled on the grid."""
    L = grid.period_length
    out = []
    for j in range(3):
        d = np.abs(grid.coords - (center[j] % L))
        d = np.minimum(d, L - d)
        out.append(d)
    dx, dy, dz = out
    return np.sqrt(
        dx[:, None, None] ** 2 + dy[None, :, None] ** 2 + dz[None, None, :] ** 2
    )


def cutoff_ramp(d: np.ndarray, r: float) -> np.ndarray:
    """1 on [0, r/2], 0 beyond r, linear ramp of slope -2/r in between."""
    return np.clip(2.0 - 2.0 * d / r, 0.0, 1.0)


def build_peak(spec: PeakSpec, U: RadialProfile, grid: TorusGrid) -> ScalarField:
    """Sample U(d/eps) * ramp(d) around the requested center."""
    if spec.cutoff_radius > grid.period_length / 2.0:
        raise ParameterError(
            f"cutoff radius {spec.cutoff_radius} exceeds half the period "
            f"{grid.period_length / 2.0}"
        )
    d = torus_distance_grid(grid, spec.center)
    vals = evaluate(U, d.ravel() / spec.epsilon).reshape(d.shape)
    return ScalarField(grid, vals * cutoff_ramp(d, spec.cutoff_radius))


def psi_map(xi, P: SystemParams, U: RadialProfile, grid: TorusGrid,
            cutoff_radius: float | None = None) -> NehariProjection:
    """Nehari projection of the peak at xi (the low-energy trial map)."""
    r = cutoff_radius if cutoff_radius is not None else (
        default_cutoff_radius(grid.period_length, P.epsilon)
    )
    w = build_peak(PeakSpec(tuple(xi), P.epsilon, r), U, grid)
    return project_nehari(w, P)


def barycenter(u: ScalarField, p: float) -> tuple[float, float, float]:
    """Circular-mean center of the (u+)^p mass, one angle per axis.

    Matches the Euclidean barycenter whenever the mass sits inside a
    half-period ball; raises when a direction is undefined (e.g. constant
    fields, or antipodal mass cancellation on an axis).
    """
    w = np.maximum(u.values, 0.0) ** p
    total = float(w.sum()) * u.grid.cell_volume
    if total <= 0.0:
        raise BarycenterUndefinedError("field has no positive part")
    L = u.grid.period_length
    angles = 2.0 * np.pi * u.grid.coords / L
    phasor_1d = np.exp(1j * angles)
    out = []
    axis_sums = [w.sum(axis=(1, 2)), w.sum(axis=(0, 2)), w.sum(axis=(0, 1))]
    for j in range(3):
        z = complex((axis_sums[j] * phasor_1d).sum()) * u.grid.cell_volume
        if abs(z) < 1e-12 * total:
            raise BarycenterUndefinedError(
                f"axis {j}: circular mean direction undefined"
            )
        out.append((L * math.atan2(z.imag, z.real) / (2.0 * np.pi)) % L)
    return tuple(out)


def max_point(u: ScalarField) -> tuple[tuple[float, float, float], float, int]:
    """Global argmax (lexicographic tie-break), its value, and the count of
    strict 26-neighbor local maxima at least half as tall."""
    vals = u.values
    flat_idx = int(np.argmax(vals))  # first occurrence = lexicographic in (ix,iy,iz)
    ix, iy, iz = np.unravel_index(flat_idx, vals.shape)
    h = u.grid.spacing
    point = (ix * h, iy * h, iz * h)
    value = float(vals[ix, iy, iz])

    strict = np.ones_like(vals, dtype=bool)
    for sx in (-1, 0, 1):
        for sy in (-1, 0, 1):
            for sz in (-1, 0, 1):
                if sx == sy == sz == 0:
                    continue
                strict &= vals > np.roll(vals, (sx, sy, sz), axis=(0, 1, 2))
    count = int(np.count_nonzero(strict & (vals >= 0.5 * value)))
    return point, value, count


def concentration_ratio(u: ScalarField, q, radius: float, P: SystemParams,
                        m_infinity: float) -> float:
    """Normalized (u+)^p mass in the ball of ``radius`` around q, against the
    full limit mass 2p/(p-2) * m_infinity."""
    L = u.grid.period_length
    if not (0.0 < radius <= L / 2.0):
        raise ParameterError(f"radius must lie in (0, L/2], got {radius}")
    d = torus_distance_grid(u.grid, q)
    w = np.maximum(u.values, 0.0) ** P.p
    mass = float(w[d < radius].sum()) * u.grid.cell_volume / P.epsilon**3
    full = 2.0 * P.p / (P.p - 2.0) * m_infinity
    return mass / full


def profile_error(u: ScalarField, P: SystemParams, U: RadialProfile,
                  cutoff_radius: float | None = None) -> float:
    """Sup-norm distance to the reference peak centered at the maximum."""
    point, _, _ = max_point(u)
    r = cutoff_radius if cutoff_radius is not None else (
        default_cutoff_radius(u.grid.period_length, P.epsilon)
    )
    w = build_peak(PeakSpec(point, P.epsilon, r), U, u.grid)
    return float(np.max(np.abs(u.values - w.values)))


def constant_branch(p: float) -> tuple[float, float]:
    """Positive constant solution c and the coefficient in J = vol * coeff / eps^3.

    c solves  c^(p-2) - 4 pi c^2 - 1 = 0; the unique positive root sits just
    above (4 pi)^(1/(p-4)).  Bisection plus Newton polish.
    """
    if not (4.0 < p < 6.0):
        raise ParameterError(f"p must lie in (4, 6), got {p}")
    four_pi = 4.0 * math.pi

    def f(c):
        return c ** (p - 2.0) - four_pi * c * c - 1.0

    lo = four_pi ** (1.0 / (p - 4.0))
    hi = 2.0 * lo
    while f(hi) < 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * mid:
            break
    c = 0.5 * (lo + hi)
    for _ in range(3):  # Newton polish to round-off
        df = (p - 2.0) * c ** (p - 3.0) - 2.0 * four_pi * c
        c -= f(c) / df
    coeff = 0.25 * c * c + (0.25 - 1.0 / p) * c**p
    return float(c), float(coeff)


def phi_smallness(u: ScalarField, a: float) -> float:
    """C^2-type surrogate of the potential: sup|phi| + sup|grad phi| + sup|Lap phi|."""
    phi = bp.solve_phi(u, a)
    gx, gy, gz = gradient_fields(phi)
    grad_mag = np.sqrt(gx.values**2 + gy.values**2 + gz.values**2)
    lap = laplacian_field(phi)
    return float(np.max(np.abs(phi.values)) + grad_mag.max() + np.max(np.abs(lap.values)))


def diagnose(u: ScalarField, P: SystemParams, U: RadialProfile, m_infinity: float,
             radius: float | None = None) -> ProfileDiagnostics:
    """Bundle all shape diagnostics for one candidate solution."""
    point, value, n_max = max_point(u)
    try:
        bary = barycenter(u, P.p)
    except BarycenterUndefinedError:
        bary = None
    r = radius if radius is not None else u.grid.period_length / 4.0
    ratio = concentration_ratio(u, point, r, P, m_infinity)
    err = profile_error(u, P, U)
    phi_c2 = phi_smallness(u, P.a)
    return ProfileDiagnostics(
        max_point=point,
        max_value=value,
        n_local_maxima=n_max,
        barycenter=bary,
        concentration_ratio=ratio,
        sup_profile_error=err,
        phi_c2=phi_c2,
    )

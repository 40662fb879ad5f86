"""Radial ground state of the limit problem -Lap(U) + U = U^(p-1) on R^3.

The profile is found by shooting on the radial ODE

    u'' + (2/r) u' - u + |u|^(p-2) u = 0,   u(0) = u0,  u'(0) = 0,

bisecting the initial height u0 between the two generic failure modes:
trajectories that cross zero (u0 too large) and trajectories that turn
around while still positive and climb back toward the rest state u = 1
(u0 too small).  The decaying separatrix between them is the ground state.

Because the zero state is an exponentially unstable equilibrium of the
radial flow, double-precision trajectories leave the separatrix at a
finite radius no matter how tight the bisection; the table is therefore
truncated a safety margin before that departure and continued with the
closed-form tail  c * exp(-kappa*r) / r,  which solves the linearized far
field exactly in 3-D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import quad, simpson, solve_ivp
from scipy.interpolate import PchipInterpolator

from .errors import BracketError, IntegrationError, ParameterError

__all__ = [
    "RadialProfile",
    "ShootOutcome",
    "shoot",
    "find_ground_state",
    "limit_energy",
    "evaluate",
    "save_profile",
    "load_profile",
]

BRACKET_LO = 1.001
BRACKET_HI = 1.0e3
SPLICE_THRESHOLD = 1e-8  # splice tail where U drops below this times u0
DEPARTURE_MARGIN = 3.0   # radius margin trimmed before the event radius
TAIL_FIT_WINDOW = 4.0    # radius window for the decay-rate fit
TABLE_DR = 0.01


@dataclass(frozen=True)
class Tolerances:
    """Step control for the adaptive radial integrator."""

    rtol: float = 1e-10
    atol_scale: float = 1e-13  # absolute tolerance = atol_scale * u0

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol_scale > 0):
            raise ParameterError("integration tolerances must be positive")


@dataclass(frozen=True)
class ShootOutcome:
    """Result of one radial shot.

    kind is 'crossed_zero' (hit u = 0 going down), 'blowup' (turned around
    at positive u; the trajectory then grows back and never decays), or
    'decayed' (still positive and decreasing at r_max).
    """

    kind: Literal["crossed_zero", "blowup", "decayed"]
    radius: float
    solution: object = field(repr=False, default=None)


@dataclass
class RadialProfile:
    """Tabulated radial ground state with an analytic exponential tail."""

    p: float
    r_nodes: np.ndarray
    u_values: np.ndarray
    u0: float
    decay_rate: float
    tail_amplitude: float
    h1_norm_sq: float = 0.0   # integral(|grad U|^2 + U^2)
    p_mass: float = 0.0       # integral(U^p)
    _interp: PchipInterpolator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.r_nodes = np.asarray(self.r_nodes, dtype=float)
        self.u_values = np.asarray(self.u_values, dtype=float)
        if self.r_nodes[0] != 0.0:
            raise ParameterError("radial table must start at r = 0")
        if np.any(np.diff(self.u_values) >= 0) or np.any(self.u_values <= 0):
            raise ParameterError("radial table must be strictly positive and decreasing")
        if not (0.9 <= self.decay_rate <= 1.1):
            raise ParameterError(f"tail decay rate {self.decay_rate} outside [0.9, 1.1]")

    def _interpolator(self) -> PchipInterpolator:
        if self._interp is None:
            self._interp = PchipInterpolator(self.r_nodes, self.u_values, extrapolate=False)
        return self._interp

    def __call__(self, r):
        return evaluate(self, r)


def _rhs(p: float):
    pm1 = p - 1.0

    def rhs(r, y):
        u, du, _, _, _ = y
        f = np.sign(u) * np.abs(u) ** pm1
        ddu = -2.0 / r * du + u - f
        # quadrature states: integral of u'^2 r^2, u^2 r^2, |u|^p r^2
        r2 = r * r
        return (du, ddu, du * du * r2, u * u * r2, np.abs(u) ** p * r2)

    return rhs


def _series_start(p: float, u0: float) -> tuple[float, list[float]]:
    """Series initial data u ~ u0 + (u0 - u0^(p-1)) r^2/6 near the center.

    The start radius shrinks with u0 so the quadratic term stays a small
    correction even for violent large-amplitude shots.
    """
    c2 = (u0 - u0 ** (p - 1.0)) / 6.0
    r0 = min(1e-3, 0.05 * math.sqrt(u0 / abs(c2))) if c2 != 0 else 1e-3
    u_r0 = u0 + c2 * r0**2
    du_r0 = 2.0 * c2 * r0
    # center contributions to the quadrature states
    igrad = (2.0 * c2) ** 2 * r0**5 / 5.0
    i2 = u0**2 * r0**3 / 3.0
    ip = u0**p * r0**3 / 3.0
    return r0, [u_r0, du_r0, igrad, i2, ip]


def shoot(p: float, u0: float, r_max: float = 30.0,
          step_control: Tolerances = Tolerances()) -> ShootOutcome:
    """Integrate one radial trajectory and classify its fate."""
    if not (4.0 < p < 6.0):
        raise ParameterError(f"p must lie in (4, 6), got {p}")
    if not (u0 > 1.0):
        raise ParameterError(f"u0 must exceed 1 (ground-state max is >= 1), got {u0}")
    if r_max < 20.0:
        raise ParameterError(f"r_max must be >= 20, got {r_max}")

    r0, y0 = _series_start(p, u0)

    def crossing(r, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1.0

    def turning(r, y):
        return y[1]

    turning.terminal = True
    turning.direction = 1.0

    sol = solve_ivp(
        _rhs(p), (r0, r_max), y0, method="DOP853",
        rtol=step_control.rtol, atol=step_control.atol_scale * u0,
        events=(crossing, turning), dense_output=True,
    )
    if not sol.success:
        raise IntegrationError(f"radial integration failed: {sol.message}",
                               last_state=(sol.t[-1], sol.y[:, -1]))
    if sol.t_events[0].size:
        return ShootOutcome("crossed_zero", float(sol.t_events[0][0]), sol)
    if sol.t_events[1].size:
        return ShootOutcome("blowup", float(sol.t_events[1][0]), sol)
    return ShootOutcome("decayed", float(sol.t[-1]), sol)


def _classify(p, u0, r_max, tols) -> str:
    return shoot(p, u0, r_max, tols).kind


def find_ground_state(p: float, tol: float = 1e-12, r_max: float = 30.0,
                      step_control: Tolerances = Tolerances()) -> RadialProfile:
    """Bisect the shooting parameter and build the tabulated profile."""
    if not (4.0 < p < 6.0):
        raise ParameterError(f"p must lie in (4, 6), got {p}")
    if not (tol > 0):
        raise ParameterError(f"tol must be > 0, got {tol}")

    lo = BRACKET_LO
    lo_kind = _classify(p, lo, r_max, step_control)
    if lo_kind == "decayed":
        return _build_profile(p, lo, r_max, step_control)
    hi = None
    cand = 2.0
    while cand <= BRACKET_HI:
        kind = _classify(p, cand, r_max, step_control)
        if kind == "decayed":
            return _build_profile(p, cand, r_max, step_control)
        if kind != lo_kind:
            hi = cand
            break
        lo = cand
        cand *= 2.0
    if hi is None:
        raise BracketError(
            f"no shooting bracket found in [{BRACKET_LO}, {BRACKET_HI}] for p={p}"
        )

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        kind = _classify(p, mid, r_max, step_control)
        if kind == "decayed":
            return _build_profile(p, mid, r_max, step_control)
        if kind == lo_kind:
            lo = mid
        else:
            hi = mid

    u0 = 0.5 * (lo + hi)
    return _build_profile(p, u0, r_max, step_control)


def _build_profile(p, u0, r_max, tols) -> RadialProfile:
    outcome = shoot(p, u0, r_max, tols)
    r_event = outcome.radius
    r_reliable = r_event - DEPARTURE_MARGIN if outcome.kind != "decayed" else r_event
    if r_reliable <= 2.0:
        raise IntegrationError(
            f"trajectory for u0={u0} unreliable beyond r={r_reliable:.3f}"
        )

    sol = outcome.solution
    dense_r = np.arange(TABLE_DR, r_reliable, TABLE_DR)
    dense_r = dense_r[dense_r >= sol.t[0]]
    dense_u = sol.sol(dense_r)[0]

    # splice where U drops below threshold, else at the reliability horizon
    below = np.nonzero(dense_u < SPLICE_THRESHOLD * u0)[0]
    splice_idx = below[0] if below.size else dense_u.size - 1
    r_s = dense_r[splice_idx]

    # decay rate from a least-squares fit of log(u * r) on the last window
    fit_mask = (dense_r >= r_s - TAIL_FIT_WINDOW) & (dense_r <= r_s)
    rr, uu = dense_r[fit_mask], dense_u[fit_mask]
    slope, _ = np.polyfit(rr, np.log(uu * rr), 1)
    decay_rate = float(-slope)
    tail_amplitude = float(dense_u[splice_idx] * r_s * math.exp(decay_rate * r_s))

    r_nodes = np.concatenate(([0.0], dense_r[: splice_idx + 1]))
    u_values = np.concatenate(([u0], dense_u[: splice_idx + 1]))

    # high-accuracy quadrature pass: re-integrate the augmented system to r_s
    r0, y0 = _series_start(p, u0)
    aug = solve_ivp(_rhs(p), (r0, r_s), y0, method="DOP853",
                    rtol=tols.rtol, atol=tols.atol_scale * u0)
    if not aug.success:
        raise IntegrationError(f"quadrature pass failed: {aug.message}")
    igrad, i2, ip = aug.y[2, -1], aug.y[3, -1], aug.y[4, -1]

    # analytic tail contributions beyond the splice radius
    c, k = tail_amplitude, decay_rate
    tail_grad = quad(lambda r: (c * math.exp(-k * r)) ** 2 * (k + 1.0 / r) ** 2,
                     r_s, r_s + 60.0)[0]
    tail_2 = c**2 * math.exp(-2.0 * k * r_s) / (2.0 * k)
    tail_p = quad(lambda r: (c * math.exp(-k * r) / r) ** p * r * r,
                  r_s, r_s + 60.0)[0]

    h1_norm_sq = 4.0 * math.pi * (igrad + i2 + tail_grad + tail_2)
    p_mass = 4.0 * math.pi * (ip + tail_p)

    return RadialProfile(
        p=p, r_nodes=r_nodes, u_values=u_values, u0=u0,
        decay_rate=decay_rate, tail_amplitude=tail_amplitude,
        h1_norm_sq=h1_norm_sq, p_mass=p_mass,
    )


def evaluate(profile: RadialProfile, r):
    """Profile value at radius r >= 0 (scalar or array), tail beyond the table."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ParameterError("radius must be nonnegative")
    scalar = r_arr.ndim == 0
    r_arr = np.atleast_1d(r_arr)
    out = np.empty_like(r_arr)
    r_last = profile.r_nodes[-1]
    inside = r_arr <= r_last
    if inside.any():
        out[inside] = profile._interpolator()(r_arr[inside])
    if (~inside).any():
        rt = r_arr[~inside]
        out[~inside] = profile.tail_amplitude * np.exp(-profile.decay_rate * rt) / rt
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


def limit_energy(profile: RadialProfile) -> float:
    """(p-2)/(2p) * integral(U^p), by radial quadrature over the table + tail."""
    p = profile.p
    r, u = profile.r_nodes, profile.u_values
    core = simpson(u**p * r * r, x=r)
    c, k, r_s = profile.tail_amplitude, profile.decay_rate, r[-1]
    tail = quad(lambda rr: (c * math.exp(-k * rr) / rr) ** p * rr * rr,
                r_s, r_s + 60.0)[0]
    mass = 4.0 * math.pi * (core + tail)
    return (p - 2.0) / (2.0 * p) * mass


# ---------------------------------------------------------------------------
# persistence: plain-text table
# ---------------------------------------------------------------------------


def save_profile(path, profile: RadialProfile) -> None:
    with open(path, "w") as fh:
        fh.write("# p u0 decay_rate tail_amplitude\n")
        fh.write(f"# {float(profile.p)!r} {float(profile.u0)!r} "
                 f"{float(profile.decay_rate)!r} {float(profile.tail_amplitude)!r}\n")
        for r, u in zip(profile.r_nodes, profile.u_values):
            fh.write(f"{float(r)!r} {float(u)!r}\n")


def load_profile(path) -> RadialProfile:
    meta = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 4:
                    try:
                        meta = [float(x) for x in parts]
                    except ValueError:
                        pass
                continue
            r, u = line.split()
            rows.append((float(r), float(u)))
    if meta is None:
        raise ParameterError(f"{path}: missing profile metadata header")
    p, u0, rate, amp = meta
    r_nodes = np.array([r for r, _ in rows])
    u_values = np.array([u for _, u in rows])
    return RadialProfile(p=p, r_nodes=r_nodes, u_values=u_values, u0=u0,
                         decay_rate=rate, tail_amplitude=amp)

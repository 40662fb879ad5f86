"""Projected Sobolev-gradient descent on the Nehari set, with multistart.

One iteration: take a preconditioned gradient step, then rescale the
trial field back onto the Nehari set (energies along a ray follow from
cached scalars, so line-search probes cost three transforms each).
Armijo backtracking keeps the energy monotone; convergence is declared
on the relative gradient norm together with the pointwise PDE residual.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np
import scipy.fft as sfft

from . import bopp_podolsky as bp
from .errors import (
    NonDescentError,
    NumericalError,
    ParameterError,
    ProjectionUndefinedError,
)
from .grid import (
    ScalarField,
    TorusGrid,
    dealiased_power,
    dealiased_product,
    integrate,
    resample,
    spectrum,
)
from .ground_state import RadialProfile, find_ground_state
from .nehari import SystemParams, nehari_scale_root
from .profiles import (
    PeakSpec,
    barycenter,
    build_peak,
    default_cutoff_radius,
)
from .errors import BarycenterUndefinedError

__all__ = [
    "SolverOptions",
    "SolveReport",
    "MultistartResult",
    "minimize_from",
    "multistart",
    "continue_in_epsilon",
]

STEP_UNDERFLOW = 1e-18
DEDUP_L2_REL = 1e-4
NONCONSTANCY_CV = 1e-3  # coefficient-of-variation threshold


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 2000
    grad_tol: float = 1e-6      # on ||grad||_eps / ||u||_eps
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4

    def __post_init__(self):
        if self.max_iters <= 0 or self.grad_tol <= 0 or self.step_init <= 0:
            raise ParameterError("solver options must be positive")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ParameterError("backtrack_factor must lie in (0, 1)")
        if not (0.0 < self.armijo_c < 0.5):
            raise ParameterError("armijo_c must lie in (0, 1/2)")


@dataclass(frozen=True)
class SolveReport:
    field: ScalarField
    energy: float
    grad_norm: float
    iterations: int
    t_history: tuple[float, ...]
    converged: bool
    pde_residual: float
    params: SystemParams

    @property
    def is_nonconstant(self) -> bool:
        """Coefficient-of-variation test separating the constant branch."""
        vals = self.field.values
        mean = float(vals.mean())
        if mean == 0.0:
            return True
        return float(vals.std()) / abs(mean) >= NONCONSTANCY_CV


class _Iterate:
    """Field on the Nehari set with its ray scalars and potential cached."""

    __slots__ = ("u", "uhat", "A", "B", "C", "phi", "energy", "t")

    def __init__(self, u, uhat, A, B, C, phi, energy, t):
        self.u = u
        self.uhat = uhat
        self.A = A
        self.B = B
        self.C = C
        self.phi = phi
        self.energy = energy
        self.t = t


def _project_iterate(w: ScalarField, P: SystemParams) -> _Iterate:
    """Project w onto the Nehari set, reusing one electrostatic solve."""
    eps = P.epsilon
    what = spectrum(w)
    A = (
        w.grid.volume * float(np.sum(w.grid.k_sq * np.abs(what) ** 2)) / eps
        + w.grid.cell_volume * float(np.sum(w.values**2)) / eps**3
    )
    if P.dealias:
        w_sq = dealiased_product(w, w)
        C = integrate(dealiased_power(w, P.p, rectify=True)) / eps**3
    else:
        w_sq = w * w
        C = w.grid.cell_volume * float(np.sum(np.maximum(w.values, 0.0) ** P.p)) / eps**3
    if C <= 0.0:
        raise ProjectionUndefinedError("iterate has no positive part")
    phi_w = bp.solve_phi(w, P.a, dealias=P.dealias)
    B = integrate(w_sq * phi_w) / eps**3
    t = nehari_scale_root(A, B, C, P.p)
    tA, tB, tC = t * t * A, t**4 * B, t**P.p * C
    u = t * w
    phi_u = (t * t) * phi_w  # quadratic homogeneity, exact on the grid
    energy = 0.5 * tA + 0.25 * tB - tC / P.p
    return _Iterate(u, t * what, tA, tB, tC, phi_u, energy, t)


def _gradient(state: _Iterate, P: SystemParams):
    """Sobolev gradient, its squared eps-norm, and the PDE residual field."""
    eps = P.epsilon
    u = state.u
    g = u.grid
    lap = sfft.ifftn(-g.k_sq * state.uhat, norm="forward").real
    if P.dealias:
        phi_u = dealiased_product(state.phi, u).values
        power = dealiased_power(u, P.p - 1.0, rectify=True).values
    else:
        phi_u = state.phi.values * u.values
        power = np.maximum(u.values, 0.0) ** (P.p - 1.0)
    resid_vals = -eps * eps * lap + u.values + phi_u - power
    rhat = sfft.fftn(resid_vals, norm="forward")
    ghat = rhat / (eps * eps * g.k_sq + 1.0)
    grad = ScalarField(g, sfft.ifftn(ghat, norm="forward").real)
    weight = g.k_sq / eps + 1.0 / eps**3
    grad_norm_sq = g.volume * float(np.sum(weight * np.abs(ghat) ** 2))
    resid_l2 = math.sqrt(g.cell_volume * float(np.sum(resid_vals**2)))
    u_l2 = math.sqrt(g.cell_volume * float(np.sum(u.values**2)))
    pde_residual = resid_l2 / u_l2 if u_l2 > 0 else math.inf
    return grad, grad_norm_sq, pde_residual


def minimize_from(u0: ScalarField, P: SystemParams, opts: SolverOptions = SolverOptions(),
                  log: IO[str] | None = None) -> SolveReport:
    """Descend J from u0 (projected), stopping on the gradient tolerance.

    Raises NonDescentError when backtracking underflows, and
    ProjectionUndefinedError when an iterate loses its positive part.
    """
    state = _project_iterate(u0, P)
    t_history = [state.t]
    step = opts.step_init
    grad, grad_norm_sq, pde_res = _gradient(state, P)
    iterations = 0

    for iterations in range(1, opts.max_iters + 1):
        u_norm_sq = state.A
        rel_grad = math.sqrt(grad_norm_sq / u_norm_sq)
        if log is not None:
            log.write(json.dumps({
                "iter": iterations - 1,
                "energy": state.energy,
                "grad_norm": rel_grad,
                "t": t_history[-1],
            }) + "\n")
        if rel_grad <= opts.grad_tol and pde_res <= 10.0 * opts.grad_tol:
            return SolveReport(
                field=state.u, energy=state.energy, grad_norm=rel_grad,
                iterations=iterations - 1, t_history=tuple(t_history),
                converged=True, pde_residual=pde_res, params=P,
            )

        # backtracking line search on the projected energy
        step = min(step / opts.backtrack_factor, 1e6 * opts.step_init)
        accepted = None
        while step >= STEP_UNDERFLOW:
            trial = state.u - step * grad
            if np.max(trial.values) <= 0.0:
                step *= opts.backtrack_factor
                continue
            candidate = _project_iterate(trial, P)
            if candidate.energy <= state.energy - opts.armijo_c * step * grad_norm_sq:
                accepted = candidate
                break
            step *= opts.backtrack_factor
        if accepted is None:
            report = SolveReport(
                field=state.u, energy=state.energy,
                grad_norm=math.sqrt(grad_norm_sq / state.A),
                iterations=iterations, t_history=tuple(t_history),
                converged=False, pde_residual=pde_res, params=P,
            )
            raise NonDescentError("line search underflow: no descent direction", report)
        assert accepted.energy <= state.energy  # Armijo guarantee
        state = accepted
        t_history.append(state.t)
        grad, grad_norm_sq, pde_res = _gradient(state, P)

    rel_grad = math.sqrt(grad_norm_sq / state.A)
    return SolveReport(
        field=state.u, energy=state.energy, grad_norm=rel_grad,
        iterations=iterations, t_history=tuple(t_history),
        converged=rel_grad <= opts.grad_tol and pde_res <= 10.0 * opts.grad_tol,
        pde_residual=pde_res, params=P,
    )


@dataclass(frozen=True)
class MultistartResult:
    distinct: tuple[SolveReport, ...]
    per_seed: tuple[object, ...]  # SolveReport or the exception raised

    @property
    def failures(self) -> tuple[Exception, ...]:
        return tuple(r for r in self.per_seed if isinstance(r, Exception))


def _torus_delta(a, b, L: float) -> np.ndarray:
    d = (np.asarray(a) - np.asarray(b) + L / 2.0) % L - L / 2.0
    return d


def _aligned_l2_distance(a: SolveReport, b: SolveReport,
                         window: float) -> float:
    """Relative L2 distance after aligning nearby solutions by barycenter.

    Alignment is local: solutions whose barycenters differ by more than
    ``window`` are distinct critical points (translates of a peak at
    different positions count separately), so no shift is attempted and
    the raw distance is returned.
    """
    va, vb = a.field.values, b.field.values
    grid = a.field.grid
    h = grid.spacing
    L = grid.period_length
    base_shift = np.zeros(3, dtype=int)
    try:
        ba = np.array(barycenter(a.field, a.params.p))
        bb = np.array(barycenter(b.field, b.params.p))
        delta = _torus_delta(ba, bb, L)
        if float(np.max(np.abs(delta))) <= window:
            base_shift = np.rint(delta / h).astype(int)
    except BarycenterUndefinedError:
        pass
    norm_a = math.sqrt(float(np.sum(va**2)))
    best = math.inf
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                shift = base_shift + (dx, dy, dz)
                rolled = np.roll(vb, tuple(shift), axis=(0, 1, 2))
                dist = math.sqrt(float(np.sum((va - rolled) ** 2))) / norm_a
                best = min(best, dist)
    return best


def dedup_reports(reports: Sequence[SolveReport],
                  window: float | None = None) -> list[SolveReport]:
    """Energy-sorted representatives, same-basin duplicates collapsed.

    Two results are duplicates when their barycenters sit within the
    alignment window (default L/12) and the aligned fields differ by less
    than ``DEDUP_L2_REL`` in relative L2.
    """
    kept: list[SolveReport] = []
    for rep in sorted(reports, key=lambda r: r.energy):
        if window is None:
            window = rep.field.grid.period_length / 12.0
        if all(_aligned_l2_distance(rep, k, window) >= DEDUP_L2_REL for k in kept):
            kept.append(rep)
    return kept


def multistart(grid: TorusGrid, seeds: Sequence, P: SystemParams,
               opts: SolverOptions = SolverOptions(),
               profile: RadialProfile | None = None,
               cutoff_radius: float | None = None,
               log: IO[str] | None = None) -> MultistartResult:
    """Solve from a peak at every seed; collapse same-basin duplicates; sort by energy."""
    if len(seeds) == 0:
        raise ParameterError("multistart needs at least one seed")
    if profile is None:
        profile = find_ground_state(P.p)
    r = cutoff_radius if cutoff_radius is not None else default_cutoff_radius(
        grid.period_length, P.epsilon
    )
    per_seed: list[object] = []
    for seed in seeds:
        try:
            w = build_peak(PeakSpec(tuple(seed), P.epsilon, r), profile, grid)
            per_seed.append(minimize_from(w, P, opts, log=log))
        except NumericalError as exc:
            per_seed.append(exc)
    good = [r for r in per_seed if isinstance(r, SolveReport)]
    return MultistartResult(distinct=tuple(dedup_reports(good)), per_seed=tuple(per_seed))


def continue_in_epsilon(report: SolveReport, P_next: SystemParams,
                        opts: SolverOptions = SolverOptions(),
                        grid: TorusGrid | None = None,
                        log: IO[str] | None = None) -> SolveReport:
    """Warm-start the solve at a smaller epsilon (same grid or finer)."""
    if P_next.epsilon > report.params.epsilon:
        raise ParameterError(
            f"continuation must not increase epsilon "
            f"({report.params.epsilon} -> {P_next.epsilon})"
        )
    u = report.field
    if grid is not None and grid != u.grid:
        if grid.n_per_axis < u.grid.n_per_axis or grid.period_length != u.grid.period_length:
            raise ParameterError("continuation grid must be the same torus, same or finer")
        u = resample(u, grid.n_per_axis)
    return minimize_from(u, P_next, opts, log=log)

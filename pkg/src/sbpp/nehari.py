"""Energy functional, Nehari residual/projection, and the Sobolev gradient.

The functional on the rescaled torus is

    J(u) = 1/2 ||u||_eps^2 + 1/(4 eps^3) G(u) - 1/p |u+|_{p,eps}^p

and every evaluation reduces to the three scalars

    A = ||u||_eps^2,   B = (1/eps^3) G(u),   C = |u+|_{p,eps}^p,

computed once per field.  Scaling a field by t > 0 maps them to
(t^2 A, t^4 B, t^p C) exactly (the electrostatic map is quadratic even on
the grid), so ray operations such as the Nehari projection never re-solve
the fourth-order equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from . import bopp_podolsky as bp
from .errors import ConsistencyError, ParameterError, ProjectionUndefinedError
from .grid import (
    ScalarField,
    dealiased_power,
    dealiased_product,
    integrate,
    spectrum,
)

__all__ = [
    "SystemParams",
    "NehariProjection",
    "energy",
    "nehari_residual",
    "project_nehari",
    "nehari_scale_root",
    "grad",
    "energy_on_nehari",
    "pde_residual_field",
]

RESIDUAL_TOL = 1e-10     # |N(t u)| <= tol * ||t u||_eps^2 after projection
REDUCED_FORM_TOL = 1e-8  # precondition threshold for the reduced energy


@dataclass(frozen=True)
class SystemParams:
    """Coefficients of the rescaled system (frequency, charge, mass fixed to 1)."""

    p: float
    a: float
    epsilon: float
    dealias: bool = False

    def __post_init__(self):
        if not (4.0 < self.p < 6.0):
            raise ParameterError(f"p must lie in (4, 6), got {self.p}")
        bp.validate_coupling(self.a)
        if not (self.epsilon > 0):
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class NehariProjection:
    """Scaling t placing t*u on the Nehari set, with the projected field."""

    t: float
    field: ScalarField
    energy: float
    nehari_residual: float


class _RayScalars:
    """The (A, B, C) triple of a field, plus its potential, cached."""

    __slots__ = ("A", "B", "C", "phi")

    def __init__(self, u: ScalarField, P: SystemParams):
        eps = P.epsilon
        uhat = spectrum(u)
        grad_sq = u.grid.volume * float(np.sum(u.grid.k_sq * np.abs(uhat) ** 2))
        l2_sq = u.grid.cell_volume * float(np.sum(u.values**2))
        self.A = grad_sq / eps + l2_sq / eps**3
        self.phi = bp.solve_phi(u, P.a, dealias=P.dealias)
        if P.dealias:
            u_sq = dealiased_product(u, u)
        else:
            u_sq = u * u
        self.B = integrate(u_sq * self.phi) / eps**3
        self.C = _pth_mass(u, P)


def _pth_mass(u: ScalarField, P: SystemParams) -> float:
    """C = (1/eps^3) integral (u+)^p."""
    if P.dealias:
        up_p = dealiased_power(u, P.p, rectify=True)
        mass = integrate(up_p)
    else:
        mass = u.grid.cell_volume * float(np.sum(np.maximum(u.values, 0.0) ** P.p))
    return mass / P.epsilon**3


def _scalars(u: ScalarField, P: SystemParams) -> _RayScalars:
    return _RayScalars(u, P)


def _energy_from_scalars(A: float, B: float, C: float, p: float) -> float:
    return 0.5 * A + 0.25 * B - C / p


def _residual_from_scalars(A: float, B: float, C: float) -> float:
    return A + B - C


def energy(u: ScalarField, P: SystemParams) -> float:
    """J(u) = 1/2 ||u||_eps^2 + 1/(4 eps^3) G(u) - (1/p) |u+|_{p,eps}^p."""
    s = _scalars(u, P)
    return _energy_from_scalars(s.A, s.B, s.C, P.p)


def nehari_residual(u: ScalarField, P: SystemParams) -> float:
    """N(u) = ||u||_eps^2 + (1/eps^3) G(u) - |u+|_{p,eps}^p = J'(u)[u]."""
    s = _scalars(u, P)
    return _residual_from_scalars(s.A, s.B, s.C)


def nehari_scale_root(A: float, B: float, C: float, p: float) -> float:
    """Unique positive root of  g(t) = A + B t^2 - C t^(p-2).

    g(0+) = A > 0, g has a single interior critical point for p > 4 and is
    strictly decreasing afterwards, so the positive zero is unique.
    Safeguarded Newton within a sign-change bracket.
    """
    if not (A > 0 and B >= 0 and C > 0):
        raise ParameterError(f"scalars must satisfy A>0, B>=0, C>0, got {(A, B, C)}")

    def g(t):
        return A + B * t * t - C * t ** (p - 2.0)

    def dg(t):
        return 2.0 * B * t - (p - 2.0) * C * t ** (p - 3.0)

    lo = 1e-6
    hi = max((A / C) ** (1.0 / (p - 2.0)), 1.0)
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise ParameterError("Nehari root outside the bracket [1e-6, 1e6]")
    if g(lo) < 0.0:
        raise ParameterError("Nehari root outside the bracket [1e-6, 1e6]")

    t = hi
    for _ in range(200):
        gt = g(t)
        if gt > 0.0:
            lo = t
        else:
            hi = t
        d = dg(t)
        t_newton = t - gt / d if d != 0 else None
        if t_newton is not None and lo < t_newton < hi:
            t_next = t_newton
        else:
            t_next = 0.5 * (lo + hi)
        if abs(t_next - t) <= 1e-12 * t:
            t = t_next
            break
        t = t_next
    for _ in range(3):  # polish to round-off (quadratic convergence)
        d = dg(t)
        if d == 0.0:
            break
        t -= g(t) / d
    return t


def project_nehari(u: ScalarField, P: SystemParams) -> NehariProjection:
    """Scale u onto the Nehari set; requires a nontrivial positive part."""
    s = _scalars(u, P)
    if s.C <= 0.0:
        raise ProjectionUndefinedError("field has no positive part to project")
    t = nehari_scale_root(s.A, s.B, s.C, P.p)
    tA, tB, tC = t * t * s.A, t**4 * s.B, t**P.p * s.C
    proj = NehariProjection(
        t=t,
        field=t * u,
        energy=_energy_from_scalars(tA, tB, tC, P.p),
        nehari_residual=_residual_from_scalars(tA, tB, tC),
    )
    if abs(proj.nehari_residual) > RESIDUAL_TOL * tA:
        raise ConsistencyError(
            f"projection residual {proj.nehari_residual} exceeds {RESIDUAL_TOL} * ||u||^2"
        )
    return proj


def pde_residual_field(u: ScalarField, P: SystemParams,
                       phi: ScalarField | None = None) -> ScalarField:
    """Pointwise residual of  -eps^2 Lap(u) + u + phi_u u - (u+)^(p-1)."""
    eps = P.epsilon
    if phi is None:
        phi = bp.solve_phi(u, P.a, dealias=P.dealias)
    lap = sfft.ifftn(-u.grid.k_sq * spectrum(u), norm="forward").real
    if P.dealias:
        phi_u = dealiased_product(phi, u).values
        power = dealiased_power(u, P.p - 1.0, rectify=True).values
    else:
        phi_u = phi.values * u.values
        power = np.maximum(u.values, 0.0) ** (P.p - 1.0)
    vals = -eps * eps * lap + u.values + phi_u - power
    return ScalarField(u.grid, vals)


def grad(u: ScalarField, P: SystemParams) -> ScalarField:
    """Riesz representative of J'(u) in the eps-weighted H^1 inner product.

    The L^2 density is d = (1/eps^3)(-eps^2 Lap u + u + phi_u u - (u+)^(p-1));
    preconditioning by (eps^2 |k|^2 + 1)^{-1} * eps^3 returns the field g with
    <g, h>_eps = J'(u)[h] for every band-limited h.
    """
    eps = P.epsilon
    resid = pde_residual_field(u, P)
    dhat = spectrum(resid)  # density times eps^3
    ghat = dhat / (eps * eps * u.grid.k_sq + 1.0)
    return ScalarField(u.grid, sfft.ifftn(ghat, norm="forward").real)


def energy_on_nehari(u_on_N: ScalarField, P: SystemParams) -> float:
    """Reduced two-term energy, valid only on the Nehari set."""
    s = _scalars(u_on_N, P)
    resid = _residual_from_scalars(s.A, s.B, s.C)
    if abs(resid) > REDUCED_FORM_TOL * s.A:
        raise ConsistencyError(
            f"field is off the Nehari set: |N(u)| = {abs(resid):.3e} > "
            f"{REDUCED_FORM_TOL} * ||u||_eps^2"
        )
    p = P.p
    return (0.5 - 1.0 / p) * s.A + (0.25 - 1.0 / p) * s.B

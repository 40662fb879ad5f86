"""Fourth-order electrostatic solve and the quadratic charge functional.

On the torus the operator  -Lap + a^2 Lap^2 + 1  diagonalizes in Fourier
space with symbol  s + a^2 s^2 + 1 >= 1  (s = |k|^2), so the potential of
any source is a single multiplier application.  The map u -> phi_u is
quadratic in u, which the callers exploit: phi_{t u} = t^2 phi_u exactly,
including on the discrete grid.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .grid import (
    Multiplier,
    ScalarField,
    apply_multiplier,
    dealiased_product,
    integrate,
    spectrum,
)

__all__ = [
    "validate_coupling",
    "solve_phi",
    "G",
    "dG",
    "dPhi",
    "d2Phi",
    "h2_norm_sq",
]

FOUR_PI = 4.0 * np.pi


def validate_coupling(a: float) -> float:
    """The sign and coercivity results need 0 < a < 1/2 (with unit mass)."""
    if not (0.0 < a < 0.5):
        raise ParameterError(f"coupling a must lie in (0, 1/2), got {a}")
    return float(a)


def _inverse_operator(a: float) -> Multiplier:
    return Multiplier(lambda s: 1.0 / (s + a * a * s * s + 1.0))


def _solve(rhs: ScalarField, a: float) -> ScalarField:
    return apply_multiplier(rhs, _inverse_operator(a))


def solve_phi(u: ScalarField, a: float, dealias: bool = False) -> ScalarField:
    """Unique solution of  -Lap(v) + a^2 Lap^2(v) + v = 4 pi u^2."""
    validate_coupling(a)
    u_sq = dealiased_product(u, u) if dealias else u * u
    return _solve(FOUR_PI * u_sq, a)


def G(u: ScalarField, a: float, dealias: bool = False) -> float:
    """Charge self-interaction  integral(u^2 phi_u)."""
    phi = solve_phi(u, a, dealias=dealias)
    u_sq = dealiased_product(u, u) if dealias else u * u
    return integrate(u_sq * phi)


def dPhi(u: ScalarField, h: ScalarField, a: float, dealias: bool = False) -> ScalarField:
    """Directional derivative of u -> phi_u: solves the same operator with rhs 8 pi u h."""
    validate_coupling(a)
    uh = dealiased_product(u, h) if dealias else u * h
    return _solve(2.0 * FOUR_PI * uh, a)


def d2Phi(h: ScalarField, k: ScalarField, a: float, dealias: bool = False) -> ScalarField:
    """Second derivative of the quadratic map; independent of the base point."""
    validate_coupling(a)
    hk = dealiased_product(h, k) if dealias else h * k
    return _solve(2.0 * FOUR_PI * hk, a)


def dG(u: ScalarField, h: ScalarField, a: float, dealias: bool = False) -> float:
    """G'(u)[h] = 4 integral(phi_u u h)."""
    phi = solve_phi(u, a, dealias=dealias)
    uh = dealiased_product(u, h) if dealias else u * h
    return 4.0 * integrate(phi * uh)


def h2_norm_sq(phi: ScalarField, a: float) -> float:
    """integral(a^2 |Lap phi|^2 + |grad phi|^2 + phi^2), spectrally."""
    validate_coupling(a)
    s = phi.grid.k_sq
    weight = a * a * s * s + s + 1.0
    phat = spectrum(phi)
    return phi.grid.volume * float(np.sum(weight * np.abs(phat) ** 2))

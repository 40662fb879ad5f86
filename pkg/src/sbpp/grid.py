"""Periodic scalar fields on a uniform cubic 3-torus grid.

Conventions fixed here and relied on everywhere else:

* grid points x_i = i*h, h = L/n, per axis; fields are stored as C-ordered
  arrays indexed ``values[ix, iy, iz]``;
* wavevectors k = (2*pi/L)*m with integer m in [-n/2, n/2) per axis;
* the forward transform carries the 1/n^3 factor (``norm="forward"``), so
  Parseval reads ``integral(f*g) = L^3 * sum_k fhat(k) * conj(ghat(k))``;
* quadrature is the rectangle rule h^3 * sum(values), spectrally exact for
  band-limited integrands;
* the Nyquist mode is zeroed in odd (first) spectral derivatives; even
  operators (Laplacian, |k|^2 quadratic forms) keep it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import ParameterError

__all__ = [
    "TorusGrid",
    "ScalarField",
    "Multiplier",
    "integrate",
    "apply_multiplier",
    "norm_eps_sq",
    "lp_norm_eps",
    "positive_part",
    "gradient_fields",
    "laplacian_field",
    "dealiased_product",
    "dealiased_power",
    "resample",
    "save_field",
    "load_field",
]

_MAGIC = b"SBPF"
_DUMP_VERSION = 1


class TorusGrid:
    """Uniform n^3 grid on the flat torus of side ``period_length``."""

    def __init__(self, n_per_axis: int, period_length: float):
        if n_per_axis < 8 or n_per_axis % 2 != 0:
            raise ParameterError(
                f"n_per_axis must be even and >= 8, got {n_per_axis}"
            )
        if not (period_length > 0):
            raise ParameterError(f"period_length must be > 0, got {period_length}")
        self.n_per_axis = int(n_per_axis)
        self.period_length = float(period_length)
        self.spacing = self.period_length / self.n_per_axis
        self.cell_volume = self.spacing**3
        self.volume = self.period_length**3

        n = self.n_per_axis
        self.coords = np.arange(n) * self.spacing
        k1 = 2.0 * np.pi * sfft.fftfreq(n, d=self.spacing)
        self.k_axis = k1
        kx = k1[:, None, None]
        ky = k1[None, :, None]
        kz = k1[None, None, :]
        self.k_sq = kx**2 + ky**2 + kz**2
        # odd-derivative wavenumbers: Nyquist zeroed
        k1_odd = k1.copy()
        k1_odd[n // 2] = 0.0
        self._k_odd = k1_odd

    def __eq__(self, other):
        return (
            isinstance(other, TorusGrid)
            and self.n_per_axis == other.n_per_axis
            and self.period_length == other.period_length
        )

    def __hash__(self):
        return hash((self.n_per_axis, self.period_length))

    def __repr__(self):
        return f"TorusGrid(n_per_axis={self.n_per_axis}, period_length={self.period_length})"

    def field(self, values) -> "ScalarField":
        return ScalarField(self, values)

    def constant(self, c: float) -> "ScalarField":
        return ScalarField(self, np.full((self.n_per_axis,) * 3, float(c)))

    def field_from_function(self, fn) -> "ScalarField":
        """Sample ``fn(x, y, z)`` on the grid (broadcasting arrays)."""
        x = self.coords[:, None, None]
        y = self.coords[None, :, None]
        z = self.coords[None, None, :]
        return ScalarField(self, np.broadcast_to(fn(x, y, z), (self.n_per_axis,) * 3))


@dataclass(frozen=True)
class ScalarField:
    """Immutable real scalar field sampled on a :class:`TorusGrid`."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        n = self.grid.n_per_axis
        if vals.shape != (n, n, n):
            raise ParameterError(f"field shape {vals.shape} does not match grid n={n}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("field values must be finite")
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def _check_same_grid(self, other: "ScalarField"):
        if self.grid != other.grid:
            raise ParameterError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check_same_grid(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check_same_grid(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - float(other))

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            self._check_same_grid(other)
            return ScalarField(self.grid, self.values * other.values)
        return ScalarField(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())


@dataclass(frozen=True)
class Multiplier:
    """Isotropic Fourier multiplier; ``symbol`` maps |k|^2 to a real factor."""

    symbol: Callable[[np.ndarray], np.ndarray]

    def __call__(self, k_sq: np.ndarray) -> np.ndarray:
        return self.symbol(k_sq)


def spectrum(f: ScalarField) -> np.ndarray:
    """Forward transform with the 1/n^3 normalization."""
    return sfft.fftn(f.values, norm="forward")


def from_spectrum(grid: TorusGrid, fhat: np.ndarray) -> ScalarField:
    return ScalarField(grid, sfft.ifftn(fhat, norm="forward").real)


def integrate(f: ScalarField) -> float:
    """Rectangle-rule integral h^3 * sum(values)."""
    return f.grid.cell_volume * float(f.values.sum())


def apply_multiplier(f: ScalarField, m: Multiplier) -> ScalarField:
    """Inverse transform of symbol(|k|^2) * fhat(k); output real."""
    with np.errstate(divide="ignore", invalid="ignore"):
        sym = np.asarray(m(f.grid.k_sq), dtype=np.float64)
    if not np.all(np.isfinite(sym)):
        raise ParameterError("multiplier symbol is non-finite on an attainable |k|^2")
    return from_spectrum(f.grid, sym * spectrum(f))


def h1_seminorm_sq(f: ScalarField) -> float:
    """integral |grad f|^2 via Parseval: L^3 * sum |k|^2 |fhat|^2."""
    fhat = spectrum(f)
    return f.grid.volume * float(np.sum(f.grid.k_sq * np.abs(fhat) ** 2))


def l2_norm_sq(f: ScalarField) -> float:
    return f.grid.cell_volume * float(np.sum(f.values**2))


def norm_eps_sq(f: ScalarField, eps: float) -> float:
    """(1/eps) |grad f|_2^2 + (1/eps^3) |f|_2^2."""
    if not (eps > 0):
        raise ParameterError(f"eps must be > 0, got {eps}")
    return h1_seminorm_sq(f) / eps + l2_norm_sq(f) / eps**3


def lp_norm_eps(f: ScalarField, p: float, eps: float) -> float:
    """((1/eps^3) integral |f|^p)^(1/p)."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    if not (eps > 0):
        raise ParameterError(f"eps must be > 0, got {eps}")
    mass = f.grid.cell_volume * float(np.sum(np.abs(f.values) ** p))
    return (mass / eps**3) ** (1.0 / p)


def positive_part(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, np.maximum(f.values, 0.0))


def gradient_fields(f: ScalarField) -> tuple[ScalarField, ScalarField, ScalarField]:
    """Spectral first derivatives (Nyquist zeroed)."""
    g = f.grid
    fhat = spectrum(f)
    k = g._k_odd
    out = []
    for shape in ((-1, 1, 1), (1, -1, 1), (1, 1, -1)):
        dk = 1j * k.reshape(shape) * fhat
        out.append(ScalarField(g, sfft.ifftn(dk, norm="forward").real))
    return tuple(out)


def laplacian_field(f: ScalarField) -> ScalarField:
    return from_spectrum(f.grid, -f.grid.k_sq * spectrum(f))


# ---------------------------------------------------------------------------
# optional 3/2-rule dealiasing for nonlinear terms (convergence studies)
# ---------------------------------------------------------------------------


def _pad_factor(n: int) -> int:
    m = (3 * n) // 2
    return m if m % 2 == 0 else m + 1


def _split_nyquist(shifted: np.ndarray, axis: int) -> np.ndarray:
    """Unpack the shared -n/2 plane into half-weight planes at +-n/2."""
    half = 0.5 * np.take(shifted, [0], axis=axis)
    rest = np.take(shifted, range(1, shifted.shape[axis]), axis=axis)
    return np.concatenate([half, rest, half], axis=axis)


def _fold_nyquist(shifted: np.ndarray, axis: int) -> np.ndarray:
    """Inverse of :func:`_split_nyquist`: merge +-n/2 planes into one."""
    n1 = shifted.shape[axis]
    out = np.take(shifted, range(0, n1 - 1), axis=axis).copy()
    first = tuple(slice(None) if a != axis else slice(0, 1) for a in range(out.ndim))
    last = tuple(slice(None) if a != axis else slice(n1 - 1, n1) for a in range(shifted.ndim))
    out[first] += shifted[last]
    return out


def _pad_values(f: ScalarField, m: int) -> np.ndarray:
    """Spectral (trigonometric) interpolation of f onto an m^3 grid."""
    n = f.grid.n_per_axis
    if m < n:
        raise ParameterError("padding target must not be smaller than the source grid")
    s = sfft.fftshift(spectrum(f))
    for axis in range(3):
        s = _split_nyquist(s, axis)  # shape grows to n+1 per axis
    big = np.zeros((m, m, m), dtype=complex)
    off = m // 2 - n // 2
    big[off:off + n + 1, off:off + n + 1, off:off + n + 1] = s
    return sfft.ifftn(sfft.ifftshift(big), norm="forward").real


def _crop_values(vals: np.ndarray, grid: TorusGrid) -> ScalarField:
    """Spectral truncation onto ``grid`` (modes beyond its Nyquist dropped)."""
    n = grid.n_per_axis
    m = vals.shape[0]
    s = sfft.fftshift(sfft.fftn(vals, norm="forward"))
    off = m // 2 - n // 2
    block = s[off:off + n + 1, off:off + n + 1, off:off + n + 1]
    for axis in range(3):
        block = _fold_nyquist(block, axis)
    return from_spectrum(grid, sfft.ifftshift(block))


def _sub_nyquist_indices(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    idx = sfft.fftfreq(n, d=1.0 / n).astype(int)
    kept = idx[np.abs(idx) < n // 2]
    return np.where(np.abs(idx) < n // 2)[0], kept % m


def _pad_projected(f: ScalarField, m: int) -> np.ndarray:
    """Zero-Nyquist spectral interpolation onto an m^3 grid.

    Dropping the Nyquist planes makes padding and cropping exact adjoints,
    which the energy gradients in dealiased mode rely on; resolved fields
    carry only round-off there anyway.
    """
    n = f.grid.n_per_axis
    src, dst = _sub_nyquist_indices(n, m)
    big = np.zeros((m, m, m), dtype=complex)
    big[np.ix_(dst, dst, dst)] = spectrum(f)[np.ix_(src, src, src)]
    return sfft.ifftn(big, norm="forward").real


def _crop_projected(vals: np.ndarray, grid: TorusGrid) -> ScalarField:
    """Adjoint of :func:`_pad_projected`: keep modes strictly below Nyquist."""
    n = grid.n_per_axis
    m = vals.shape[0]
    dst, src = _sub_nyquist_indices(n, m)
    big = sfft.fftn(vals, norm="forward")
    small = np.zeros((n, n, n), dtype=complex)
    small[np.ix_(dst, dst, dst)] = big[np.ix_(src, src, src)]
    return from_spectrum(grid, small)


def dealiased_product(f: ScalarField, g: ScalarField) -> ScalarField:
    """f*g with 3/2-rule zero padding (exact for band-limited factors)."""
    f._check_same_grid(g)
    m = _pad_factor(f.grid.n_per_axis)
    return _crop_projected(_pad_projected(f, m) * _pad_projected(g, m), f.grid)


def dealiased_power(f: ScalarField, q: float, rectify: bool = False) -> ScalarField:
    """|f|^q (or (f+)^q with ``rectify``) evaluated on the padded grid.

    For non-integer q the 3/2 rule is not exact; it only reduces aliasing.
    """
    m = _pad_factor(f.grid.n_per_axis)
    vals = _pad_projected(f, m)
    vals = np.maximum(vals, 0.0) if rectify else np.abs(vals)
    return _crop_projected(vals**q, f.grid)


def resample(f: ScalarField, n_new: int) -> ScalarField:
    """Spectral resampling onto a finer/coarser grid of the same torus."""
    grid_new = TorusGrid(n_new, f.grid.period_length)
    if n_new == f.grid.n_per_axis:
        return ScalarField(grid_new, f.values)
    if n_new > f.grid.n_per_axis:
        return ScalarField(grid_new, _pad_values(f, n_new))
    return _crop_values(f.values, grid_new)


# ---------------------------------------------------------------------------
# binary field dump
# ---------------------------------------------------------------------------


def save_field(path, f: ScalarField, epsilon: float = 0.0) -> None:
    """Write the SBPF dump: magic, version, n, L, epsilon, x-fastest f64."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _DUMP_VERSION))
        fh.write(struct.pack("<I", f.grid.n_per_axis))
        fh.write(struct.pack("<d", f.grid.period_length))
        fh.write(struct.pack("<d", float(epsilon)))
        fh.write(f.values.ravel(order="F").astype("<f8").tobytes())


def load_field(path) -> tuple[ScalarField, float]:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ParameterError(f"{path}: not an SBPF field dump")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _DUMP_VERSION:
            raise ParameterError(f"{path}: unsupported dump version {version}")
        (n,) = struct.unpack("<I", fh.read(4))
        (length,) = struct.unpack("<d", fh.read(8))
        (epsilon,) = struct.unpack("<d", fh.read(8))
        raw = np.frombuffer(fh.read(n**3 * 8), dtype="<f8")
        if raw.size != n**3:
            raise ParameterError(f"{path}: truncated dump")
    grid = TorusGrid(n, length)
    vals = raw.reshape((n, n, n), order="F")
    return ScalarField(grid, vals), epsilon

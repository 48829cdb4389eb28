"""
Periodic grids, spectral fields and dyadic frequency projections.

Fourier convention
------------------
Coefficients are normalised so that a constant field ``c`` has a single
coefficient ``c`` at ``k = 0``::

    f(x) = sum_k  f_hat(k) exp(i k.x),     f_hat = fftn(f) / N**d

Wavenumbers are ``k = 2 pi n / L`` with FFT index ``n``.  Littlewood-Paley
blocks use the smooth bump

    phi(xi) = h(2 - 2|xi|) / (h(2 - 2|xi|) + h(2|xi| - 1)),   h(s) = exp(-1/s) (s > 0)

which equals 1 on ``|xi| <= 1/2`` and 0 on ``|xi| >= 1``; the block multiplier
is ``psi_j(k) = phi(k / 2**(j+1)) - phi(k / 2**j)``.  All norms use the
normalised (probability) measure on the torus, so ``||f||_2**2`` equals the
sum of ``|f_hat|**2``.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import finufft
import numpy as np
import scipy.fft

from .errors import NumericalError, RangeError, ShapeError

__all__ = [
    "Grid",
    "Field",
    "phi",
    "psi",
    "workers",
    "fft",
    "ifft",
    "to_spectral",
    "to_physical",
    "lp_block",
    "low_pass",
    "high_pass",
    "helmholtz_project",
    "dealias",
    "multiply",
    "gradient",
    "divergence",
    "laplacian",
    "lp_norm",
    "evaluate",
    "SpectralInterpolator",
]


def workers() -> int:
    """Thread cap for FFT and NUFFT calls (``ARTIFACT_THREADS``, default 1)."""
    try:
        return max(1, int(os.environ.get("ARTIFACT_THREADS", "1")))
    except ValueError:
        return 1


def _h(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def phi(r) -> np.ndarray:
    """Smooth radial cutoff: 1 for ``r <= 1/2``, 0 for ``r >= 1``."""
    r = np.asarray(r, dtype=float)
    a = _h(2.0 - 2.0 * r)
    b = _h(2.0 * r - 1.0)
    return a / (a + b)


def psi(r) -> np.ndarray:
    """Annulus profile ``phi(r/2) - phi(r)``, supported in ``1/2 < r < 2``."""
    r = np.asarray(r, dtype=float)
    return phi(r / 2.0) - phi(r)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the torus ``[0, L)**d``.

    Parameters
    ----------
    dim : int
        Spatial dimension ``d``.
    n : int
        Points per dimension, a power of two, at least 8.
    length : float
        Torus period ``L``.
    dealias_fraction : float
        Fraction of the Nyquist index kept by :func:`dealias` (2/3 rule).
    """

    dim: int
    n: int
    length: float = 2.0 * math.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.dim < 1:
            raise ShapeError(f"dimension must be >= 1, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ShapeError(f"points per dimension must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ShapeError("torus period must be positive")
        if not 0 < self.dealias_fraction <= 1:
            raise ShapeError("dealias_fraction must lie in (0, 1]")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        """Spatial axes of a component-first array."""
        return tuple(range(1, self.dim + 1))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def index(self) -> np.ndarray:
        """Integer FFT indices per axis, shape ``(d, n, ..., n)``."""
        n1 = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)
        return np.stack(np.meshgrid(*([n1] * self.dim), indexing="ij"))

    @cached_property
    def k(self) -> np.ndarray:
        """Wavevectors, shape ``(d, n, ..., n)``."""
        return (2.0 * math.pi / self.length) * self.index

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def x(self) -> np.ndarray:
        """Grid coordinates, shape ``(d, n, ..., n)``."""
        x1 = np.arange(self.n) * self.dx
        return np.stack(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.dealias_fraction * self.n / 2.0
        keep = np.all(np.abs(self.index) <= cut, axis=0)
        return keep & ~self.nyquist_mask

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        return np.any(self.index == -(self.n // 2), axis=0)

    @cached_property
    def j_min(self) -> int:
        return int(math.floor(math.log2(2.0 * math.pi / self.length)))

    @cached_property
    def j_max(self) -> int:
        return int(math.ceil(math.log2(self.kmag.max())))

    @property
    def j_range(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    @cached_property
    def blocks(self) -> np.ndarray:
        """Stack of ``psi_j(k)`` for ``j`` in :attr:`j_range`."""
        return np.stack([_block_multiplier(self, int(j)) for j in self.j_range])

    def block(self, j: int) -> np.ndarray:
        self.check_block(j)
        return self.blocks[j - self.j_min]

    def check_block(self, j: int) -> None:
        if not self.j_min <= j <= self.j_max:
            raise RangeError(f"block {j} outside resolved range [{self.j_min}, {self.j_max}]")

    def low_multiplier(self, m: int) -> np.ndarray:
        """``phi(k / 2**m)``; includes the mean."""
        return _low_multiplier(self, int(m))

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.dim, self.n * factor, self.length, self.dealias_fraction)


@functools.lru_cache(maxsize=256)
def _block_multiplier(grid: Grid, j: int) -> np.ndarray:
    out = phi(grid.kmag / 2.0 ** (j + 1)) - phi(grid.kmag / 2.0**j)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=256)
def _low_multiplier(grid: Grid, m: int) -> np.ndarray:
    out = phi(grid.kmag / 2.0**m)
    out.setflags(write=False)
    return out


def fft(grid: Grid, arr: np.ndarray) -> np.ndarray:
    """Forward transform of a component-first array."""
    return scipy.fft.fftn(arr, axes=tuple(range(arr.ndim - grid.dim, arr.ndim)),
                          norm="forward", workers=workers())


def ifft(grid: Grid, arr: np.ndarray) -> np.ndarray:
    """Inverse transform, real part (inputs are conjugate symmetric)."""
    out = scipy.fft.ifftn(arr, axes=tuple(range(arr.ndim - grid.dim, arr.ndim)),
                          norm="forward", workers=workers())
    return out.real


class Field:
    """Real scalar or vector field on a :class:`Grid`.

    Arrays are stored component-first, ``(components, n, ..., n)``.  A field
    is built from either representation; the other is computed on first
    access and cached.  Fields are treated as immutable.
    """

    def __init__(self, grid: Grid, physical=None, spectral=None):
        if (physical is None) == (spectral is None):
            raise ValueError("give exactly one of physical or spectral")
        self.grid = grid
        self._physical = None
        self._spectral = None
        if physical is not None:
            self._physical = self._coerce(physical, float)
        else:
            self._spectral = self._coerce(spectral, complex)

    def _coerce(self, arr, dtype) -> np.ndarray:
        arr = np.array(arr, dtype=dtype)
        if arr.shape == self.grid.shape:
            arr = arr[None]
        if arr.ndim != self.grid.dim + 1 or arr.shape[1:] != self.grid.shape:
            raise ShapeError(f"array of shape {arr.shape} does not fit grid {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericalError("field contains non-finite values")
        arr.setflags(write=False)
        return arr

    @classmethod
    def from_function(cls, grid: Grid, func: Callable) -> "Field":
        """Sample ``func(x)`` where ``x`` has shape ``(d, n, ..., n)``."""
        vals = func(grid.x)
        if isinstance(vals, (list, tuple)):
            vals = np.stack([np.broadcast_to(v, grid.shape) for v in vals])
        return cls(grid, physical=np.broadcast_to(vals, np.shape(vals)))

    @classmethod
    def zeros(cls, grid: Grid, components: int = 1) -> "Field":
        return cls(grid, physical=np.zeros((components,) + grid.shape))

    @property
    def physical(self) -> np.ndarray:
        if self._physical is None:
            arr = ifft(self.grid, self._spectral)
            arr.setflags(write=False)
            self._physical = arr
        return self._physical

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            arr = fft(self.grid, self._physical)
            arr.setflags(write=False)
            self._spectral = arr
        return self._spectral

    @property
    def sync_state(self) -> str:
        if self._physical is not None and self._spectral is not None:
            return "both"
        return "physical" if self._physical is not None else "spectral"

    @property
    def components(self) -> int:
        arr = self._physical if self._physical is not None else self._spectral
        return arr.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.components == self.grid.dim and self.components > 1

    def component(self, i: int) -> "Field":
        if self._spectral is not None:
            return Field(self.grid, spectral=self._spectral[i:i + 1])
        return Field(self.grid, physical=self._physical[i:i + 1])

    @property
    def mean(self) -> np.ndarray:
        return self.spectral[(slice(None),) + (0,) * self.grid.dim].real

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid or other.components != self.components:
            raise ShapeError("fields live on different grids or have different components")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, spectral=self.spectral + other.spectral)
        return Field(self.grid, physical=self.physical + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, spectral=self.spectral - other.spectral)
        return Field(self.grid, physical=self.physical - other)

    def __neg__(self):
        return Field(self.grid, spectral=-self.spectral)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            return NotImplemented
        return Field(self.grid, spectral=self.spectral * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Field(dim={self.grid.dim}, n={self.grid.n}, components={self.components}, {self.sync_state})"


def to_spectral(f: Field) -> Field:
    f.spectral
    return f


def to_physical(f: Field) -> Field:
    f.physical
    return f


def lp_block(f: Field, j: int) -> Field:
    """Dyadic block ``Delta_j f``."""
    return Field(f.grid, spectral=f.spectral * f.grid.block(j))


def low_pass(f: Field, m: int) -> Field:
    """``S_m f``: the blocks ``j <= m - 1`` plus everything below ``j_min``."""
    return Field(f.grid, spectral=f.spectral * f.grid.low_multiplier(m))


def high_pass(f: Field, m: int) -> Field:
    """``f - S_m f``: the blocks ``j >= m``."""
    return Field(f.grid, spectral=f.spectral * (1.0 - f.grid.low_multiplier(m)))


def _projector_parts(grid: Grid, uh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = grid.k
    k2 = grid.k2.copy()
    k2.flat[0] = 1.0
    q = k * (np.sum(k * uh, axis=0) / k2)
    q[(slice(None),) + (0,) * grid.dim] = 0.0
    return uh - q, q


def helmholtz_project(u: Field) -> tuple[Field, Field]:
    """Split a vector field into divergence-free and gradient parts.

    Returns ``(P u, Q u)`` with ``Q = grad (-Lap)^{-1} div``; the mean
    belongs to ``P u``.
    """
    if u.components != u.grid.dim:
        raise ShapeError("Helmholtz projection needs a vector field with d components")
    p, q = _projector_parts(u.grid, u.spectral)
    return Field(u.grid, spectral=p), Field(u.grid, spectral=q)


def dealias(f: Field) -> Field:
    return Field(f.grid, spectral=f.spectral * f.grid.dealias_mask)


def multiply(f: Field, g: Field, dealiased: bool = True) -> Field:
    """Pointwise product; ``g`` may be scalar (broadcast over ``f``)."""
    if f.grid != g.grid:
        raise ShapeError("fields live on different grids")
    out = Field(f.grid, physical=f.physical * g.physical)
    return dealias(out) if dealiased else out


def gradient(f: Field) -> Field:
    """Gradient of a scalar field."""
    if f.components != 1:
        raise ShapeError("gradient expects a scalar field")
    return Field(f.grid, spectral=1j * f.grid.k * f.spectral)


def divergence(u: Field) -> Field:
    if u.components != u.grid.dim:
        raise ShapeError("divergence expects a vector field")
    return Field(u.grid, spectral=np.sum(1j * u.grid.k * u.spectral, axis=0))


def laplacian(f: Field) -> Field:
    return Field(f.grid, spectral=-f.grid.k2 * f.spectral)


def lp_norm(values: np.ndarray, p: float, dim: int) -> float | np.ndarray:
    """Normalised ``L^p`` norm over the trailing ``dim`` axes (rectangle rule).

    Leading axes are kept, except a component axis which must already have
    been reduced to a pointwise magnitude by the caller.
    """
    axes = tuple(range(values.ndim - dim, values.ndim))
    a = np.abs(values)
    if math.isinf(p):
        return a.max(axis=axes)
    if p == 1:
        return a.mean(axis=axes)
    if p == 2:
        return np.sqrt(np.mean(a * a, axis=axes))
    return np.mean(a**p, axis=axes) ** (1.0 / p)


def magnitude(arr: np.ndarray) -> np.ndarray:
    """Pointwise Euclidean magnitude over the component axis (axis ``-d-1``)."""
    if arr.shape[0] == 1:
        return np.abs(arr[0])
    return np.sqrt(np.sum(arr * arr, axis=0))


def _clean_coefficients(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    out = np.array(coeffs, dtype=complex)
    out[..., grid.nyquist_mask] = 0.0
    return np.ascontiguousarray(out)


_NUFFT2 = {1: finufft.nufft1d2, 2: finufft.nufft2d2, 3: finufft.nufft3d2}


def evaluate(grid: Grid, coeffs: np.ndarray, points: np.ndarray, eps: float = 1e-13) -> np.ndarray:
    """Trigonometric interpolation of spectral data at arbitrary points.

    ``coeffs`` has shape ``(c, n, ..., n)``; ``points`` has shape ``(d, M)``.
    Nyquist modes are dropped so the interpolant is real.  Returns ``(c, M)``.
    """
    if grid.dim not in _NUFFT2:
        raise ShapeError("off-grid evaluation supports d <= 3")
    scale = 2.0 * math.pi / grid.length
    pts = [np.ascontiguousarray(np.mod(points[i] * scale, 2.0 * math.pi)) for i in range(grid.dim)]
    c = _clean_coefficients(grid, coeffs)
    out = _NUFFT2[grid.dim](*pts, c, eps=eps, isign=1, modeord=1, nthreads=workers())
    return np.asarray(out).real.reshape(c.shape[0], -1)


class SpectralInterpolator:
    """Reusable off-grid evaluator for a fixed point set (NUFFT plan)."""

    def __init__(self, grid: Grid, points: np.ndarray, ntrans: int = 1, eps: float = 1e-13):
        self.grid = grid
        self.ntrans = ntrans
        scale = 2.0 * math.pi / grid.length
        self._plan = finufft.Plan(2, grid.shape, n_trans=ntrans, eps=eps, isign=1,
                                  modeord=1, nthreads=workers())
        pts = [np.ascontiguousarray(np.mod(points[i] * scale, 2.0 * math.pi))
               for i in range(grid.dim)]
        self._plan.setpts(*pts)

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        c = _clean_coefficients(self.grid, coeffs)
        if self.ntrans == 1:
            c = c.reshape(self.grid.shape)
        out = self._plan.execute(c)
        return np.asarray(out).real.reshape(self.ntrans, -1)


def random_field(grid: Grid, rng: np.random.Generator, components: int = 1,
                 decay: float = 1.0, kmax: float | None = None, amplitude: float = 1.0,
                 kmin: float = 0.5) -> Field:
    """Seeded random band-limited field with spectrum ``|k|^(-decay) * gaussian``.

    ``kmax`` defaults to the dealiasing cutoff; the mean is zero.
    """
    if kmax is None:
        kmax = grid.dealias_fraction * grid.n / 2.0 * 2.0 * math.pi / grid.length
    shape = (components,) + grid.shape
    noise = rng.standard_normal(shape)
    nh = fft(grid, noise)
    kk = grid.kmag.copy()
    kk.flat[0] = 1.0
    band = (grid.kmag >= kmin) & (grid.kmag <= kmax) & grid.dealias_mask
    nh = nh * np.where(band, kk ** (-decay), 0.0)
    f = ifft(grid, nh)
    scale = amplitude / max(np.sqrt(np.mean(f * f)), 1e-300)
    return Field(grid, physical=f * scale)


def band_limited(f: Field, kmax: float) -> bool:
    return bool(np.all(np.abs(f.spectral[..., f.grid.kmag > kmax]) < 1e-13 * max(1.0, np.abs(f.spectral).max())))

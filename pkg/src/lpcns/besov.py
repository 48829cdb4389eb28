"""
Homogeneous Besov norms assembled from dyadic block norms.

A :class:`NormSeries` stores ``||Delta_j f||_{L^p}`` for the resolved blocks.
Every norm in the package (weighted, truncated, space-time, tilde or not) is
an aggregation of such series, so trajectories cache them once per exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BesovIndexError, DataError, DomainError, PreconditionError
from .spectral import Field, ifft, lp_norm, magnitude

__all__ = [
    "INF",
    "BesovIndex",
    "NormSeries",
    "TimeNormSpec",
    "block_norms",
    "block_norm_matrix",
    "besov_norm",
    "aggregate",
    "spacetime_norm",
    "spacetime_from_matrix",
    "trapezoid_weights",
    "bernstein_ratio",
]

INF = math.inf


def _check_exponent(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or value < 1:
        raise DomainError(f"{name} must lie in [1, inf], got {value}")
    return value


@dataclass(frozen=True)
class BesovIndex:
    """Indices ``(s, p, r)`` of ``B^s_{p,r}``; ``p`` or ``r`` may be ``INF``."""

    s: float
    p: float
    r: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p", _check_exponent("p", self.p))
        object.__setattr__(self, "r", _check_exponent("r", self.r))


@dataclass(frozen=True)
class NormSeries:
    """Block norms ``||Delta_j f||_{L^p}`` for ``j`` in ``js``."""

    p: float
    js: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        js = np.asarray(self.js, dtype=int)
        vals = np.asarray(self.values, dtype=float)
        if js.shape != vals.shape:
            raise DataError("block indices and values differ in length")
        if np.any(vals < 0):
            raise DataError("block norms must be nonnegative")
        object.__setattr__(self, "js", js)
        object.__setattr__(self, "values", vals)

    def __getitem__(self, j: int) -> float:
        hit = np.nonzero(self.js == j)[0]
        if hit.size == 0:
            raise KeyError(j)
        return float(self.values[hit[0]])

    def as_dict(self) -> dict[int, float]:
        return {int(j): float(v) for j, v in zip(self.js, self.values)}


@dataclass(frozen=True)
class TimeNormSpec:
    """Temporal exponent ``q``, horizon ``T`` and tilde flag."""

    q: float
    T: float
    tilde: bool = False

    def __post_init__(self):
        object.__setattr__(self, "q", _check_exponent("q", self.q))
        if not self.T > 0:
            raise DomainError("time horizon must be positive")


def _block_stack(f: Field) -> np.ndarray:
    """Physical values of all blocks, shape ``(J, c, n, ..., n)``."""
    spec = f.spectral[None] * f.grid.blocks[:, None]
    return ifft(f.grid, spec)


def block_norm_values(f: Field, ps: Iterable[float]) -> dict[float, np.ndarray]:
    """Block norms for several exponents sharing one set of inverse transforms."""
    ps = [_check_exponent("p", p) for p in ps]
    stack = _block_stack(f)
    mags = np.sqrt(np.sum(stack * stack, axis=1)) if stack.shape[1] > 1 else np.abs(stack[:, 0])
    return {p: np.asarray(lp_norm(mags, p, f.grid.dim), dtype=float) for p in ps}


def block_norms(f: Field, p: float) -> NormSeries:
    """``||Delta_j f||_{L^p}`` over the resolved range (normalised measure)."""
    p = _check_exponent("p", p)
    vals = block_norm_values(f, [p])[p]
    return NormSeries(p, f.grid.j_range.copy(), vals)


def block_norm_matrix(series: Sequence[NormSeries]) -> np.ndarray:
    if len(series) == 0:
        raise DataError("no norm series given")
    return np.stack([s.values for s in series])


def _select(js: np.ndarray, cutoff) -> np.ndarray:
    if cutoff is None:
        return np.ones(js.shape, dtype=bool)
    kind, m0 = cutoff
    if kind in ("<=", "le", "low"):
        return js <= m0
    if kind in (">", "gt", "high"):
        return js > m0
    raise ValueError(f"unknown cutoff kind {kind!r}")


def _weights(js: np.ndarray, s: float, omega) -> np.ndarray:
    w = 2.0 ** (s * js.astype(float))
    if omega is not None:
        w = w * omega.at(js)
    return w


def _lr(vals: np.ndarray, r: float, axis: int = -1) -> np.ndarray:
    if math.isinf(r):
        return np.max(vals, axis=axis, initial=0.0)
    if r == 1:
        return np.sum(vals, axis=axis)
    return np.sum(vals**r, axis=axis) ** (1.0 / r)


def aggregate(js: np.ndarray, values: np.ndarray, s: float, r: float,
              omega=None, cutoff=None) -> np.ndarray:
    """``l^r`` sum over the last axis of ``omega_j 2^{js} values_j``."""
    sel = _select(js, cutoff)
    w = _weights(js, s, omega) * sel
    return _lr(values * w, r)


def besov_norm(series: NormSeries, idx: BesovIndex, omega=None, cutoff=None) -> float:
    """Weighted, optionally truncated, homogeneous Besov norm.

    Parameters
    ----------
    series : NormSeries
        Block norms with ``series.p == idx.p``.
    idx : BesovIndex
    omega : AcceptableWeight, optional
        Frequency weight; ``None`` is the unweighted norm.
    cutoff : tuple, optional
        ``("<=", m0)`` keeps blocks ``j <= m0``; ``(">", m0)`` keeps ``j > m0``.
    """
    if series.p != idx.p:
        raise BesovIndexError(f"series has p={series.p}, index has p={idx.p}")
    return float(aggregate(series.js, series.values, idx.s, idx.r, omega, cutoff))


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.size == 1:
        return np.zeros(1)
    dt = np.diff(times)
    w = np.zeros_like(times)
    w[:-1] += dt / 2.0
    w[1:] += dt / 2.0
    return w


def _time_norm(vals: np.ndarray, w: np.ndarray, q: float) -> np.ndarray:
    """Temporal ``L^q`` over axis 0 with quadrature weights ``w``."""
    if math.isinf(q):
        return np.max(vals, axis=0)
    wq = w.reshape((-1,) + (1,) * (vals.ndim - 1))
    if q == 1:
        return np.sum(wq * vals, axis=0)
    return np.sum(wq * vals**q, axis=0) ** (1.0 / q)


def spacetime_from_matrix(times: np.ndarray, js: np.ndarray, matrix: np.ndarray, idx: BesovIndex,
                          spec: TimeNormSpec, omega=None, cutoff=None) -> float:
    """Space-time norm from a ``(n_times, J)`` matrix of block norms."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise DataError("empty trajectory")
    keep = times <= spec.T * (1.0 + 1e-12) + 1e-14
    times, matrix = times[keep], np.asarray(matrix)[keep]
    if times.size == 0:
        raise DataError("no samples inside the time horizon")
    w = trapezoid_weights(times)
    sel = _select(js, cutoff)
    weighted = matrix * (_weights(js, idx.s, omega) * sel)
    if spec.tilde:
        return float(_lr(_time_norm(weighted, w, spec.q), idx.r))
    return float(_time_norm(_lr(weighted, idx.r, axis=-1), w, spec.q))


def spacetime_norm(traj, idx: BesovIndex, spec: TimeNormSpec, name: str = "u",
                   omega=None, cutoff=None) -> float:
    """``L^q_T(B^s_{p,r})`` or ``L~^q_T(B^s_{p,r})`` of one field of a trajectory.

    Temporal integrals use trapezoid quadrature over the stored samples
    with ``t <= T``.
    """
    if len(traj) == 0:
        raise DataError("empty trajectory")
    mat = traj.norm_matrix(name, idx.p)
    return spacetime_from_matrix(traj.times, traj.grid.j_range, mat, idx, spec, omega, cutoff)


def _derivative_tensor(f: Field, k: int) -> np.ndarray:
    """Physical values of all ``k``-th partial derivatives, flattened per point."""
    spec = f.spectral
    for _ in range(k):
        spec = (1j * f.grid.k[:, None] * spec[None]).reshape((-1,) + f.grid.shape)
    return ifft(f.grid, spec)


def _support_radii(f: Field, rel: float = 1e-12) -> tuple[float, float]:
    amp = np.max(np.abs(f.spectral), axis=0)
    top = amp.max()
    if top == 0:
        raise PreconditionError("zero field has no Bernstein ratio")
    mask = amp > rel * top
    km = f.grid.kmag[mask]
    return float(km.min()), float(km.max())


def bernstein_ratio(f: Field, k: int, p: float, q: float, mode: str = "ball",
                    lam: float | None = None):
    """Bernstein ratios for a band-limited field.

    ``mode="ball"`` returns ``||D^k f||_q / (lam^{k + d(1/p - 1/q)} ||f||_p)``
    for ``f`` supported in ``|xi| <= lam``.  ``mode="annulus"`` requires support
    in ``lam/2 <= |xi| <= 2 lam`` and returns the pair
    ``(upper, lower)`` with ``upper`` as above and
    ``lower = lam^k ||f||_p / ||D^k f||_p``.  ``D^k`` is the full tensor of
    ``k``-th partials with pointwise Frobenius magnitude.
    """
    p = _check_exponent("p", p)
    q = _check_exponent("q", q)
    if q < p:
        raise DomainError("Bernstein inequality needs q >= p")
    kmin, kmax = _support_radii(f)
    tol = 1e-9
    if mode == "ball":
        lam = kmax if lam is None else float(lam)
        if kmax > lam * (1 + tol):
            raise PreconditionError(f"spectrum reaches |k|={kmax} beyond the ball of radius {lam}")
    elif mode == "annulus":
        lam = kmax / 2.0 if lam is None else float(lam)
        if kmax > 2 * lam * (1 + tol) or kmin < lam / 2 * (1 - tol):
            raise PreconditionError(f"spectrum [{kmin}, {kmax}] leaves the annulus at scale {lam}")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    d = f.grid.dim
    dk = magnitude(_derivative_tensor(f, k)) if k > 0 else magnitude(f.physical)
    base = magnitude(f.physical)
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    norm_fp = float(lp_norm(base, p, d))
    upper = float(lp_norm(dk, q, d)) / (lam ** (k + d * (inv_p - inv_q)) * norm_fp)
    if mode == "ball":
        return upper
    lower = lam**k * norm_fp / float(lp_norm(dk, p, d))
    return upper, lower

"""
Acceptable frequency weights and the common envelope of a convergent family.

A weight ``omega`` is acceptable with growth ``delta0`` when ``omega_i = 1``
for ``i <= 0`` and ``1 <= omega_i <= omega_{i+1} <= 2**delta0 * omega_i``.
:func:`build_weight` turns a family of block-mass sequences ``A^n`` (for
example ``A_i^n = 2^{i s} ||Delta_i f^n||_p``) into a weight that grows to
infinity while keeping ``sup_n sum_i omega_i A_i^n`` finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DataError, DomainError, RangeError

__all__ = [
    "AcceptableWeight",
    "validate",
    "build_weight",
    "tail_cutoff",
    "weighted_mass",
    "uniform_bound",
]


@dataclass(frozen=True)
class AcceptableWeight:
    """Weight values ``omega_i`` for ``i = 0, ..., len(values) - 1``.

    Indices below zero read as 1 and indices above the stored range repeat
    the last value.  ``thresholds`` records the sequence ``N_k`` when the
    weight came from :func:`build_weight`.
    """

    delta0: float
    values: np.ndarray
    thresholds: tuple[int, ...] = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise DataError("weight values must be a nonempty 1-d sequence")
        object.__setattr__(self, "values", vals)

    @classmethod
    def identity(cls, top: int = 0, delta0: float = 1.0) -> "AcceptableWeight":
        return cls(delta0, np.ones(top + 1))

    @classmethod
    def power(cls, top: int, rate: float, delta0: float, shift: int = 0) -> "AcceptableWeight":
        """``omega_i = 2^{rate (i - shift)}`` where positive, 1 otherwise."""
        i = np.arange(top + 1)
        return cls(delta0, np.maximum(1.0, 2.0 ** (rate * (i - shift))))

    @property
    def top(self) -> int:
        return self.values.size - 1

    def at(self, js) -> np.ndarray:
        js = np.asarray(js, dtype=int)
        idx = np.clip(js, 0, self.top)
        out = self.values[idx]
        return np.where(js <= 0, 1.0, out)

    def __getitem__(self, i: int) -> float:
        return float(self.at(i))


def validate(omega: AcceptableWeight, tol: float = 1e-12) -> bool:
    """True iff ``omega`` is acceptable with its declared ``delta0``."""
    d0 = omega.delta0
    if not (0 < d0 <= 1):
        return False
    v = omega.values
    if not np.all(np.isfinite(v)):
        return False
    if abs(v[0] - 1.0) > tol:
        return False
    if np.any(v < 1.0 - tol):
        return False
    ratio = v[1:] / v[:-1]
    if np.any(ratio < 1.0 - tol) or np.any(ratio > 2.0**d0 * (1.0 + tol)):
        return False
    return True


def _as_family(sequences, limit) -> tuple[np.ndarray, np.ndarray]:
    seqs = [np.asarray(a, dtype=float) for a in sequences]
    if not seqs:
        raise DataError("need at least one sequence")
    length = max(a.size for a in seqs)
    if limit is not None:
        length = max(length, np.asarray(limit).size)
    pad = lambda a: np.pad(a, (0, length - a.size))
    fam = np.stack([pad(a) for a in seqs])
    lim = fam[-1] if limit is None else pad(np.asarray(limit, dtype=float))
    if np.any(fam < 0) or np.any(lim < 0):
        raise DataError("block masses must be nonnegative")
    if not (np.all(np.isfinite(fam)) and np.all(np.isfinite(lim))):
        raise DataError("block masses must be finite")
    return fam, lim


def build_weight(sequences: Sequence, limit=None, delta0: float = 0.5, tail_mass: float = 0.0,
                 top: int | None = None, tol: float = 1e-10) -> AcceptableWeight:
    """Greedy frequency envelope for a family converging in ``l^1``.

    Parameters
    ----------
    sequences : sequence of arrays
        Block masses ``A^n_i``, ``i = 0, 1, ...``.
    limit : array, optional
        The ``l^1`` limit ``A^infty``; defaults to the last member.  It is
        included in the supremum over the family.
    delta0 : float
        Growth exponent; ``omega_i = 2^{k delta0}`` on ``N_k <= i < N_{k+1}``.
    tail_mass : float
        Mass of every member beyond the stored indices (added to each tail).
    top : int, optional
        Highest index of the returned weight; defaults to the sequence length.
    tol : float
        Slack allowed in the monotone decay of ``||A^n - A^infty||_1``.

    Notes
    -----
    ``N_0 = 1`` and, for ``k >= 1``, ``N_k`` is the smallest index above
    ``N_{k-1}`` with ``sup_n sum_{i >= N_k} A^n_i < 2^{-k}``.
    """
    if not 0 < delta0 <= 1:
        raise DomainError("delta0 must lie in (0, 1]")
    fam, lim = _as_family(sequences, limit)
    dist = np.sum(np.abs(fam - lim), axis=1)
    if np.any(np.diff(dist) > tol):
        raise ConvergenceError(f"l1 distances to the limit are not decreasing: {dist.tolist()}")
    allseq = np.vstack([fam, lim])
    length = allseq.shape[1]
    # tails[n, i] = sum_{i' >= i} A^n_{i'} (+ tail beyond storage), i = 0..length
    tails = np.zeros((allseq.shape[0], length + 1))
    tails[:, :length] = np.cumsum(allseq[:, ::-1], axis=1)[:, ::-1]
    tails += tail_mass
    sup_tail = tails.max(axis=0)
    top = length - 1 if top is None else int(top)
    thresholds = [1]
    k = 1
    while True:
        start = thresholds[-1] + 1
        ok = np.nonzero(sup_tail[start:] < 2.0 ** (-k))[0]
        if ok.size == 0:
            break
        nk = start + int(ok[0])
        if nk > top:
            break
        thresholds.append(nk)
        k += 1
    values = np.ones(top + 1)
    for kk, nk in enumerate(thresholds):
        if kk == 0:
            continue
        values[nk:] = 2.0 ** (kk * delta0)
    return AcceptableWeight(delta0, values, tuple(thresholds))


def weighted_mass(omega: AcceptableWeight, seq) -> float:
    """``sum_i omega_i A_i`` for ``i = 0, 1, ...``."""
    seq = np.asarray(seq, dtype=float)
    return float(np.sum(omega.at(np.arange(seq.size)) * seq))


def uniform_bound(sequences: Sequence, omega: AcceptableWeight) -> float:
    """``max_n sum_i A^n_i + sum_{k>=1} 2^{k delta0} 2^{-k}`` over the built levels."""
    base = max(float(np.sum(np.asarray(a, dtype=float))) for a in sequences)
    levels = max(len(omega.thresholds) - 1, 0)
    k = np.arange(1, levels + 1)
    return base + float(np.sum(2.0 ** (k * (omega.delta0 - 1.0))))


def tail_cutoff(omega: AcceptableWeight, C4: float, eps: float, j_min: int = 0) -> int:
    """Smallest index ``N >= j_min`` in the stored range with ``omega_N >= C4/eps``."""
    if not (C4 > 0 and eps > 0):
        raise DomainError("C4 and eps must be positive")
    target = C4 / eps
    for n in range(j_min, omega.top + 1):
        if omega.at(n) >= target:
            return n
    raise RangeError(f"weight tops out at {omega.values[-1]:.4g} below the target {target:.4g}")

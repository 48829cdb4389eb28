"""
Bony decomposition, smooth compositions and product-estimate ratios.

With ``S_m`` the low-pass filter (mean included) and ``Delta_j`` the dyadic
blocks, the paraproduct and remainder are

    T_f g  = sum_j S_{j-1} f . Delta_j g
    R(f,g) = sum_{|j-k| <= 1} Delta_j f . Delta_k g

and on the grid ``fg = T_f g + T_g f + R(f,g) + mean(f) mean(g)`` holds
exactly.  All three operators return dealiased fields.
"""

from __future__ import annotations

import math
from typing import Callable, Mapping

import numpy as np

from .besov import INF, aggregate, block_norm_values
from .errors import DomainError, PreconditionError, ShapeError
from .spectral import Field, Grid, dealias, ifft, low_pass

__all__ = [
    "KINDS",
    "para",
    "remainder",
    "product",
    "bony_residual",
    "estimate_ratio",
    "hypothesis",
    "compose",
    "inverse_density",
    "telescoping_terms",
    "compose_ratio",
    "random_ensemble",
]


KINDS = ("Tfg1", "Tfg4", "Rfg3", "product4", "product5", "bfg", "Cfg", "remark22a", "remark22b")


def _pair(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise ShapeError("fields live on different grids")
    if f.components != g.components and 1 not in (f.components, g.components):
        raise ShapeError("component counts do not broadcast")


def _blocks_physical(f: Field) -> np.ndarray:
    return ifft(f.grid, f.spectral[None] * f.grid.blocks[:, None])


def _lows_physical(f: Field, shift: int) -> np.ndarray:
    """Physical ``S_{j+shift} f`` for every resolved ``j``."""
    mult = np.stack([f.grid.low_multiplier(int(j) + shift) for j in f.grid.j_range])
    return ifft(f.grid, f.spectral[None] * mult[:, None])


def para(f: Field, g: Field) -> Field:
    """Paraproduct ``T_f g = sum_j S_{j-1} f . Delta_j g`` (dealiased)."""
    _pair(f, g)
    out = np.sum(_lows_physical(f, -1) * _blocks_physical(g), axis=0)
    return dealias(Field(f.grid, physical=out))


def remainder(f: Field, g: Field) -> Field:
    """Remainder ``R(f,g) = sum_{|j-k|<=1} Delta_j f . Delta_k g`` (dealiased)."""
    _pair(f, g)
    bf = _blocks_physical(f)
    bg = _blocks_physical(g)
    near = bg.copy()
    near[1:] += bg[:-1]
    near[:-1] += bg[1:]
    out = np.sum(bf * near, axis=0)
    return dealias(Field(f.grid, physical=out))


def product(f: Field, g: Field) -> Field:
    """Dealiased pointwise product (scalar factors broadcast)."""
    _pair(f, g)
    return dealias(Field(f.grid, physical=f.physical * g.physical))


def bony_residual(f: Field, g: Field) -> float:
    """Relative error of ``fg = T_f g + T_g f + R(f,g) + mean f mean g`` in L^2."""
    lhs = product(f, g).spectral
    rhs = para(f, g).spectral + para(g, f).spectral + remainder(f, g).spectral
    zero = (slice(None),) + (0,) * f.grid.dim
    rhs[zero] += f.mean * g.mean
    scale = max(np.sqrt(np.sum(np.abs(lhs) ** 2)), 1e-300)
    return float(np.sqrt(np.sum(np.abs(lhs - rhs) ** 2)) / scale)


def _norm(f: Field, s: float, p: float, r: float, omega=None) -> float:
    vals = block_norm_values(f, [p])[p]
    return float(aggregate(f.grid.j_range, vals, s, r, omega))


def hypothesis(kind: str, d: int, p: float, params: Mapping[str, float], delta0: float) -> tuple[bool, str]:
    """Whether the index parameters satisfy the hypothesis of ``kind``."""
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    dp = d * inv_p
    if kind == "Tfg1":
        return params["t"] <= 0, "t <= 0"
    if kind == "Tfg4":
        return params["t"] + delta0 <= 0, "t + delta0 <= 0"
    if kind == "Rfg3":
        bound = -min(dp, d * (1.0 - inv_p))
        return params["t1"] + params["t2"] > bound, f"t1 + t2 > {bound}"
    if kind in ("product4", "product5"):
        s1, s2 = params["s1"], params["s2"]
        cap2 = dp - (delta0 if kind == "product5" else 0.0)
        ok = s1 <= dp and s2 <= cap2 and s1 + s2 > d * max(0.0, 2 * inv_p - 1)
        return ok, f"s1 <= d/p, s2 <= {cap2}, s1 + s2 > d max(0, 2/p - 1)"
    if kind == "bfg":
        return (not math.isinf(p)) and p >= 1, "1 <= p < inf"
    if kind == "Cfg":
        return d >= 2 and 1 <= p < 2 * d and 0 <= delta0 <= 1, "d >= 2, 1 <= p < 2d, 0 <= delta0 <= 1"
    if kind in ("remark22a", "remark22b"):
        return d > 2 and 1 <= p < d, "d > 2, 1 <= p < d"
    raise ValueError(f"unknown estimate kind {kind!r}; expected one of {KINDS}")


def estimate_ratio(kind: str, f: Field, g: Field, p: float, r: float = 1.0,
                   params: Mapping[str, float] | None = None, omega=None,
                   strict: bool = True) -> float:
    """LHS / RHS of a weighted product estimate evaluated on ``(f, g)``.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    p, r : float
        Integrability and summation indices.
    params : mapping
        ``s, t`` for the paraproduct kinds, ``t1, t2`` for ``Rfg3`` and
        ``s1, s2`` for ``product4`` / ``product5``.  The remaining kinds
        fix their regularities.
    omega : AcceptableWeight, optional
    strict : bool
        Raise :class:`PreconditionError` on a violated hypothesis; with
        ``False`` the ratio is computed anyway (for blow-up probes).
    """
    _pair(f, g)
    params = dict(params or {})
    d = f.grid.dim
    delta0 = 0.0 if omega is None else omega.delta0
    ok, text = hypothesis(kind, d, p, params, delta0)
    if strict and not ok:
        raise PreconditionError(f"{kind}: hypothesis {text} fails for {params}, p={p}")
    dp = 0.0 if math.isinf(p) else d / p
    N = lambda h, s, rr, w=None: _norm(h, s, p, rr, w)
    if kind == "Tfg1":
        s, t = params["s"], params["t"]
        lhs = N(para(f, g), s + t, r, omega)
        rhs = N(f, t + dp, 1.0) * N(g, s, r, omega)
    elif kind == "Tfg4":
        s, t = params["s"], params["t"]
        lhs = N(para(f, g), s + t, r, omega)
        rhs = N(g, s, r) * N(f, t + dp, 1.0, omega)
    elif kind == "Rfg3":
        t1, t2 = params["t1"], params["t2"]
        lhs = N(remainder(f, g), t1 + t2, r, omega)
        rhs = N(f, t1 + dp, r) * N(g, t2, INF, omega)
    elif kind in ("product4", "bfg"):
        s1, s2 = (dp, dp) if kind == "bfg" else (params["s1"], params["s2"])
        lhs = N(product(f, g), s1 + s2 - dp, 1.0, omega)
        rhs = N(f, s1, 1.0, omega) * N(g, s2, 1.0) + N(f, s1, 1.0) * N(g, s2, 1.0, omega)
    elif kind in ("product5", "Cfg"):
        s1, s2 = (dp, dp - 1.0) if kind == "Cfg" else (params["s1"], params["s2"])
        lhs = N(product(f, g), s1 + s2 - dp, 1.0, omega)
        rhs = N(f, s1, 1.0) * N(g, s2, 1.0, omega)
    elif kind == "remark22a":
        lhs = N(product(f, g), dp - 2.0, 1.0)
        rhs = N(f, dp, 1.0) * N(g, dp - 2.0, 1.0)
    elif kind == "remark22b":
        lhs = N(product(f, g), dp - 2.0, 1.0)
        rhs = N(f, dp - 1.0, 1.0) * N(g, dp - 1.0, 1.0)
    else:
        raise ValueError(f"unknown estimate kind {kind!r}")
    if lhs == 0.0:
        return 0.0
    if rhs == 0.0:
        return math.inf
    return lhs / rhs


def compose(F: Callable[[np.ndarray], np.ndarray], f: Field,
            domain: Callable[[np.ndarray], np.ndarray] | None = None) -> Field:
    """Pointwise ``F(f)`` followed by dealiasing.

    ``domain`` is a predicate on the grid values; a ``False`` anywhere raises
    :class:`DomainError`.
    """
    vals = f.physical
    if domain is not None and not np.all(domain(vals)):
        raise DomainError("field leaves the smooth domain of F")
    return dealias(Field(f.grid, physical=F(vals)))


def inverse_density(a: Field, margin: float = 0.5) -> Field:
    """``I(a) = a / (1 + a)``; raises DomainError where ``1 + a < margin``."""
    return compose(lambda x: x / (1.0 + x), a, lambda x: 1.0 + x >= margin)


def telescoping_terms(F: Callable, dF: Callable, f: Field, j0: int, count: int = 3,
                      nodes: int = 12) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairs ``(F(S_{j+1} f) - F(S_j f), m_j Delta_j f)`` for ``j = j0 .. j0+count-1``.

    ``m_j = int_0^1 F'(S_j f + theta Delta_j f) dtheta`` by Gauss-Legendre
    quadrature; the two members agree up to quadrature error.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    th, w = 0.5 * (x + 1.0), 0.5 * w
    out = []
    for j in range(j0, j0 + count):
        lo = low_pass(f, j).physical
        blk = (low_pass(f, j + 1).physical - lo)
        diff = F(lo + blk) - F(lo)
        m = sum(wi * dF(lo + ti * blk) for ti, wi in zip(th, w))
        out.append((diff, m * blk))
    return out


def compose_ratio(F: Callable, f: Field, s: float, p: float, r: float = 1.0, omega=None,
                  domain: Callable | None = None) -> float:
    """``||F(f)||_{B^s_{p,r}(omega)} / ||f||_{B^s_{p,r}(omega)}``."""
    if s <= 0:
        raise PreconditionError("the composition estimate needs s > 0")
    top = _norm(compose(F, f, domain), s, p, r, omega)
    bot = _norm(f, s, p, r, omega)
    if bot == 0.0:
        return 0.0 if top == 0.0 else math.inf
    return top / bot


def _master_size(grid: Grid) -> int:
    return max(grid.n, 256 if grid.dim <= 2 else 64)


def random_ensemble(grid: Grid, count: int, s: float, seed: int = 0, components: int = 1,
                    kmax: float | None = None, scale: float = 1.0) -> list[Field]:
    """Seeded random fields with spectrum ``|k|^{-(s + d/2)}`` times gaussians.

    Coefficients are drawn on a fixed master lattice and restricted to the
    grid, so the same seed gives the same low modes at every resolution.
    Modes with ``|k| > kmax`` (default: the dealiasing cutoff) and the mean
    are zero.
    """
    d = grid.dim
    m = _master_size(grid)
    rng = np.random.default_rng(seed)
    master_shape = (count, components) + (m,) * d
    raw = rng.standard_normal(master_shape) + 1j * rng.standard_normal(master_shape)
    idx = tuple(np.mod(grid.index[i], m) for i in range(d))
    neg = tuple(np.mod(-grid.index[i], m) for i in range(d))
    kunit = 2.0 * math.pi / grid.length
    if kmax is None:
        kmax = grid.dealias_fraction * grid.n / 2.0 * kunit
    kk = np.where(grid.kmag > 0, grid.kmag, 1.0)
    amp = np.where((grid.kmag > 0) & (grid.kmag <= kmax) & grid.dealias_mask,
                   kk ** (-(s + d / 2.0)), 0.0)
    fields = []
    for n in range(count):
        c = raw[n][(slice(None),) + idx]
        cm = raw[n][(slice(None),) + neg]
        sym = 0.5 * (c + np.conj(cm)) * amp * scale
        fields.append(Field(grid, spectral=sym))
    return fields

"""
Flow maps and the Eulerian/Lagrangian change of coordinates.

The flow of a velocity trajectory is ``X(t, y) = y + int_0^t u(s, X(s, y)) ds``.
It is stored as the periodic displacement ``X - y`` on the grid, so spatial
derivatives of ``X`` are spectral derivatives of the displacement plus the
identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .besov import aggregate, block_norm_values, trapezoid_weights
from .errors import DataError, DiffeoError, ShapeError
from .spectral import Field, Grid, evaluate, fft, ifft, magnitude
from .trajectory import Trajectory

INF = math.inf

__all__ = [
    "FlowMap",
    "integrate_flow",
    "to_lagrangian",
    "from_lagrangian",
    "lagrangian_difference",
    "invert_flow",
]


@dataclass
class FlowMap:
    """Displacements ``X(t_i, y) - y`` at stored times, shape ``(n_t, d, n, ..., n)``."""

    grid: Grid
    times: np.ndarray
    displacement: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.displacement.shape[0] != self.times.size:
            raise DataError("one displacement per stored time is required")

    def __len__(self) -> int:
        return self.times.size

    def positions(self, i: int) -> np.ndarray:
        """Unwrapped particle positions ``X(t_i, y)`` of shape ``(d, M)``."""
        g = self.grid
        return (g.x + self.displacement[i]).reshape(g.dim, -1)

    def jacobian(self, i: int) -> np.ndarray:
        """``grad X`` at every grid point, shape ``(d, d, n, ..., n)`` (row = component)."""
        g = self.grid
        dh = fft(g, self.displacement[i])
        grad = ifft(g, 1j * g.k[None, :] * dh[:, None])  # [comp, dir]
        eye = np.eye(g.dim).reshape((g.dim, g.dim) + (1,) * g.dim)
        return grad + eye

    def det(self, i: int) -> np.ndarray:
        J = np.moveaxis(self.jacobian(i), (0, 1), (-2, -1))
        return np.linalg.det(J)

    def min_det(self) -> np.ndarray:
        return np.array([self.det(i).min() for i in range(len(self))])


def _vget(traj: Trajectory):
    name = "u" if "u" in traj.names else traj.names[0]
    return lambda t: traj.at_time(name, t)


def integrate_flow(u: Trajectory, dt: float | None = None, check: bool = True) -> FlowMap:
    """Classical RK4 for the particle ODE with spectrally interpolated velocity.

    Steps of size at most ``dt`` (default: the trajectory spacing) are taken
    between consecutive stored times; velocity between samples comes from
    cubic Lagrange interpolation in time.  The displacement is recorded at
    every stored time.

    Raises
    ------
    DiffeoError
        ``det grad X <= 0`` somewhere at a stored time.
    """
    if len(u) == 0:
        raise DataError("empty velocity trajectory")
    g = u.grid
    vget = _vget(u)
    times = u.times
    y = g.x.reshape(g.dim, -1)
    X = y.copy()
    out = [np.zeros((g.dim,) + g.shape)]
    vel = lambda t, pts: evaluate(g, vget(t), pts)
    for i in range(1, times.size):
        t0, t1 = times[i - 1], times[i]
        m = 1 if dt is None else max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
        h = (t1 - t0) / m
        for k in range(m):
            t = t0 + k * h
            k1 = vel(t, X)
            k2 = vel(t + h / 2, X + h / 2 * k1)
            k3 = vel(t + h / 2, X + h / 2 * k2)
            k4 = vel(t + h, X + h * k3)
            X = X + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append((X - y).reshape((g.dim,) + g.shape))
    flow = FlowMap(g, times.copy(), np.stack(out))
    if check:
        dets = flow.min_det()
        if np.any(dets <= 0):
            raise DiffeoError(f"flow map lost orientation: min det grad X = {dets.min():.3g}")
    return flow


def _matching_index(traj: Trajectory, flow: FlowMap) -> list[int]:
    idx = []
    for t in traj.times:
        hit = np.nonzero(np.abs(flow.times - t) <= 1e-12 * max(1.0, abs(t)))[0]
        if hit.size == 0:
            raise DataError(f"flow map has no sample at t={t}")
        idx.append(int(hit[0]))
    return idx


def to_lagrangian(traj: Trajectory, flow: FlowMap) -> Trajectory:
    """Compose every field with the flow: ``f_bar(t, y) = f(t, X(t, y))``."""
    if traj.grid != flow.grid:
        raise ShapeError("trajectory and flow map live on different grids")
    g = traj.grid
    out = Trajectory(g, dict(traj.meta, frame="lagrangian"))
    for i, fi in enumerate(_matching_index(traj, flow)):
        pts = flow.positions(fi)
        fields = {}
        for name in traj.names:
            spec = traj._data[name][i]
            vals = evaluate(g, spec, pts).reshape((spec.shape[0],) + g.shape)
            fields[name] = Field(g, physical=vals)
        out.append(float(traj.times[i]), **fields)
    return out


def invert_flow(flow: FlowMap, i: int, guess: np.ndarray | None = None, tol: float = 1e-13,
                max_iter: int = 50) -> np.ndarray:
    """Points ``y`` with ``X(t_i, y) = x`` for every grid point ``x`` (Newton).

    Returns unwrapped positions of shape ``(d, M)``.
    """
    g = flow.grid
    d = g.dim
    x = g.x.reshape(d, -1)
    dh = fft(g, flow.displacement[i])
    gradh = (1j * g.k[None, :] * dh[:, None]).reshape((d * d,) + g.shape)
    y = x - flow.displacement[i].reshape(d, -1) if guess is None else guess.copy()
    eye = np.eye(d)[:, :, None]
    for _ in range(max_iter):
        disp = evaluate(g, dh, y)
        res = y + disp - x
        err = float(np.max(np.abs(res)))
        if err < tol * max(1.0, g.length):
            return y
        J = evaluate(g, gradh, y).reshape(d, d, -1) + eye
        step = np.linalg.solve(np.moveaxis(J, -1, 0), np.moveaxis(res, -1, 0)[..., None])[..., 0]
        y = y - step.T
    raise DiffeoError(f"Newton inversion of the flow did not converge (residual {err:.3g})")


def from_lagrangian(traj: Trajectory, flow: FlowMap) -> Trajectory:
    """Inverse of :func:`to_lagrangian`: ``f(t, x) = f_bar(t, X^{-1}(t, x))``.

    Newton iterations are warm-started from the previous time level.
    """
    g = traj.grid
    out = Trajectory(g, dict(traj.meta, frame="eulerian"))
    guess = None
    for i, fi in enumerate(_matching_index(traj, flow)):
        y = invert_flow(flow, fi, guess)
        guess = y
        fields = {}
        for name in traj.names:
            spec = traj._data[name][i]
            vals = evaluate(g, spec, y).reshape((spec.shape[0],) + g.shape)
            fields[name] = Field(g, physical=vals)
        out.append(float(traj.times[i]), **fields)
    return out


def _diff_trajectory(t1: Trajectory, t2: Trajectory) -> Trajectory:
    if t1.grid != t2.grid or len(t1) != len(t2) or np.any(np.abs(t1.times - t2.times) > 1e-12):
        raise DataError("difference needs trajectories on one grid and one time grid")
    out = Trajectory(t1.grid)
    for i, t in enumerate(t1.times):
        out.append(float(t), **{n: Field(t1.grid, spectral=t1._data[n][i] - t2._data[n][i])
                                for n in t1.names})
    return out


def _time_norm(vals: np.ndarray, w: np.ndarray, q: float) -> float:
    if math.isinf(q):
        return float(np.max(vals))
    return float(np.sum(w * vals**q) ** (1.0 / q))


def zp_parts(diff: Trajectory, p: float) -> dict[str, float]:
    """``||a||_{L^inf B^{d/p}}``, ``||u||_{L^inf B^{-1+d/p}}`` and ``||u||_{L^1 B^{1+d/p}}``."""
    d = diff.grid.dim
    js = diff.grid.j_range
    w = trapezoid_weights(diff.times)
    na = aggregate(js, diff.norm_matrix("a", p), d / p, 1.0)
    nu_lo = aggregate(js, diff.norm_matrix("u", p), d / p - 1.0, 1.0)
    nu_hi = aggregate(js, diff.norm_matrix("u", p), d / p + 1.0, 1.0)
    return {"a_Linf": _time_norm(na, w, INF), "u_Linf": _time_norm(nu_lo, w, INF),
            "u_L1": _time_norm(nu_hi, w, 1.0)}



def _linf_series(traj: Trajectory, name: str) -> np.ndarray:
    g = traj.grid
    return np.array([float(np.max(magnitude(ifft(g, c)))) for c in traj._data[name]])


def _grad_linf(traj: Trajectory, name: str) -> np.ndarray:
    g = traj.grid
    out = []
    for c in traj._data[name]:
        grad = ifft(g, (1j * g.k[:, None] * c[None]).reshape((-1,) + g.shape))
        out.append(float(np.max(magnitude(grad))))
    return np.array(out)


def lagrangian_difference(t1: Trajectory, t2: Trajectory, p: float, flow1: FlowMap | None = None,
                          flow2: FlowMap | None = None, data_norm: float | None = None,
                          flow_dt: float | None = None) -> dict:
    """Difference norms of two solutions in Lagrangian and Eulerian form.

    ``t1`` plays the role of the perturbed solution ``(a^n, u^n)`` and
    ``t2`` the reference ``(a, u)``.  Returns a dictionary with

    - ``zp``: ``||(a1_bar - a2_bar, u1_bar - u2_bar)||_{Z_p(T)}``,
    - the members of the interpolation chain for ``u1_bar - u2_bar``,
    - ``eulerian_L1Linf``: ``||u1 - u2||_{L^1_T L^inf}``,
    - the flow comparison ``||u1(X2) - u1(X1)||_{L^1 L^inf}`` and its two
      bounds (pointwise gradient and Besov form),
    - ``embedding``: measured ``sup ||f - mean f||_inf / ||f||_{B^{d/p}_{p,1}}``
      over the difference samples.
    """
    g = t1.grid
    d = g.dim
    flow1 = flow1 or integrate_flow(t1, flow_dt)
    flow2 = flow2 or integrate_flow(t2, flow_dt)
    l1, l2 = to_lagrangian(t1, flow1), to_lagrangian(t2, flow2)
    ldiff = _diff_trajectory(l1, l2)
    ediff = _diff_trajectory(t1, t2)
    T = float(t1.times[-1])
    w = trapezoid_weights(t1.times)
    parts = zp_parts(ldiff, p)
    js = g.j_range
    du = ldiff.spectral("u")
    du_inf = _linf_series(ldiff, "u")
    du_mean = np.sqrt(np.sum(np.abs(du[(slice(None), slice(None)) + (0,) * d]) ** 2, axis=1))
    du_osc = np.array([float(np.max(magnitude(ifft(g, c - _mean_only(g, c))))) for c in du])
    nb = aggregate(js, ldiff.norm_matrix("u", p), d / p, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(nb > 0, du_osc / nb, 0.0)
    emb = float(np.max(ratios)) if ratios.size else 0.0
    q1 = _time_norm(du_inf, w, 1.0)
    l2linf = _time_norm(du_inf, w, 2.0)
    mean_l2 = _time_norm(du_mean, w, 2.0)
    l2b = _time_norm(nb, w, 2.0)
    geom = math.sqrt(parts["u_Linf"] * parts["u_L1"])
    sq = math.sqrt(T)
    chain = [q1, sq * l2linf, sq * (mean_l2 + emb * l2b), sq * (mean_l2 + emb * geom)]
    # flow comparison for u1 evaluated along both flows
    comp = []
    for i in range(len(t1)):
        spec = t1._data["u"][i]
        a = evaluate(g, spec, flow2.positions(i))
        b = evaluate(g, spec, flow1.positions(i))
        comp.append(float(np.max(magnitude(a - b))))
    comp = np.array(comp)
    xdiff = max(float(np.max(magnitude(flow1.displacement[i] - flow2.displacement[i])))
                for i in range(len(flow1)))
    grad1 = _grad_linf(t1, "u")
    gradb = aggregate(js, _grad_series(t1, p), d / p, 1.0)
    result = {
        "T": T,
        "zp": parts["a_Linf"] + parts["u_Linf"] + parts["u_L1"],
        "zp_parts": parts,
        "lagrangian_L1Linf": q1,
        "chain": chain,
        "chain_labels": ["L1Linf", "sqrtT*L2Linf", "sqrtT*(mean+emb*L2B)", "sqrtT*(mean+emb*geom)"],
        "chain_holds": bool(all(chain[i] <= chain[i + 1] * (1 + 1e-12) + 1e-300 for i in range(3))),
        "embedding": emb,
        "eulerian_L1Linf": _time_norm(_linf_series(ediff, "u"), w, 1.0),
        "flow_comparison": _time_norm(comp, w, 1.0),
        "flow_bound_pointwise": _time_norm(grad1, w, 1.0) * xdiff,
        "flow_bound_besov": _time_norm(gradb, w, 1.0) * xdiff,
        "flow_distance": xdiff,
    }
    if data_norm is not None:
        result["data_norm"] = data_norm
        result["lipschitz_ratio"] = result["eulerian_L1Linf"] / data_norm if data_norm > 0 else 0.0
    return result


def _mean_only(g: Grid, c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    z = (slice(None),) + (0,) * g.dim
    out[z] = c[z]
    return out


def _grad_series(traj: Trajectory, p: float) -> np.ndarray:
    g = traj.grid
    rows = []
    for c in traj._data["u"]:
        grad = (1j * g.k[:, None] * c[None]).reshape((-1,) + g.shape)
        rows.append(block_norm_values(Field(g, spectral=grad), [p])[p])
    return np.stack(rows)

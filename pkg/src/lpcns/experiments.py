"""
Scripted numerical checks of the estimates, each producing a report.

Every ``run_*`` function takes an :class:`ExperimentSpec` and returns an
:class:`ExperimentReport` holding pass/fail criteria, the measured values and
CSV-ready tables.  :data:`EXPERIMENTS` maps the public names to the runners
and :func:`run` dispatches by name.

Data conventions
----------------
The default datum is a seeded smooth field with ``max|a0| = 0.02`` and
``max|u0| = 0.1`` built from modes ``|k| <= 2.5``.  Perturbation families
are ``base + eps * eta`` with a fixed seeded direction ``eta``.  All random
coefficients live on a fixed master lattice, so every grid sees the same
function.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from .besov import INF, BesovIndex, TimeNormSpec, aggregate, block_norm_values, spacetime_norm
from .envelope import build_weight, tail_cutoff, uniform_bound, validate, weighted_mass
from .errors import DataError, DomainError, PreconditionError, RangeError
from .lagrangian import integrate_flow, lagrangian_difference
from .paraproduct import bony_residual, random_ensemble
from .solvers import (CnsState, PressureLaw, SolverConfig, Viscosity, admissible_time, cns_solve,
                      commutator, heat_solve, lame_solve, mass, momentum, rotate_points,
                      rotation_field, transport_solve)
from .spectral import Field, Grid, ifft, lp_block, magnitude, workers
from .trajectory import Trajectory

__all__ = [
    "ExperimentSpec",
    "Criterion",
    "ExperimentReport",
    "EXPERIMENTS",
    "default_spec",
    "run",
    "default_data",
    "perturbation",
    "zp_norm",
    "data_size",
    "run_lp_exactness",
    "run_heat_lame",
    "run_transport",
    "run_envelope",
    "run_tail_estimate",
    "run_lagrangian_difference",
    "run_lowfreq_difference",
    "run_continuity_sweep",
    "run_bona_smith",
    "run_counterexample",
    "run_solver_hygiene",
]


# ---------------------------------------------------------------------------
# specs and reports


@dataclass(frozen=True)
class ExperimentSpec:
    """Configuration of one experiment.

    ``T = None`` selects the admissible time of the base datum (capped at
    ``T_max``).  ``eps`` lists the perturbation sizes of the data family.
    ``params`` holds experiment-specific settings; ``tolerances`` overrides
    the default bounds of the criteria.
    """

    name: str
    d: int = 2
    p: float = 2.0
    N: int = 64
    dt: float = 5e-3
    T: float | None = 0.5
    seed: int = 0
    eps: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    delta0: float = 0.5
    mu: float = 0.5
    lam: float = 0.5
    gamma: float = 1.4
    smallness: float | None = 0.05
    T_max: float = 1.0
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d not in (2, 3):
            raise DomainError(f"dimension must be 2 or 3, got {self.d}")
        if not self.p >= 1:
            raise DomainError(f"p must be >= 1, got {self.p}")
        if self.dt <= 0 or (self.T is not None and self.T <= 0):
            raise DomainError("dt and T must be positive")
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "tolerances", dict(self.tolerances))

    def with_overrides(self, **kw) -> "ExperimentSpec":
        params = dict(self.params)
        params.update(kw.pop("params", {}) or {})
        tols = dict(self.tolerances)
        tols.update(kw.pop("tolerances", {}) or {})
        return replace(self, params=params, tolerances=tols, **kw)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["eps"] = list(self.eps)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise DataError(f"unknown spec keys: {sorted(extra)}")
        data = dict(data)
        if "eps" in data:
            data["eps"] = tuple(data["eps"])
        return cls(**data)

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def param(self, key: str, default):
        return self.params.get(key, default)

    def grid(self, n: int | None = None, d: int | None = None) -> Grid:
        return Grid(d or self.d, n or self.N)

    def solver_config(self, T: float, **kw) -> SolverConfig:
        base = dict(dt=self.dt, T=T, viscosity=Viscosity(self.mu, self.lam),
                    pressure=PressureLaw(self.gamma), p=self.p, smallness=self.smallness)
        base.update(kw)
        return SolverConfig(**base)


@dataclass
class Criterion:
    """One checked inequality ``value <= bound`` (or ``>=``)."""

    label: str
    paper_eq: str
    value: float
    bound: float
    relation: str = "<="

    @property
    def passed(self) -> bool:
        v, b = float(self.value), float(self.bound)
        if math.isnan(v) or math.isnan(b):
            return False
        return v <= b if self.relation == "<=" else v >= b

    def to_dict(self) -> dict:
        return {"label": self.label, "paper_eq": self.paper_eq, "value": _jsonable(self.value),
                "bound": _jsonable(self.bound), "relation": self.relation, "pass": self.passed}


@dataclass
class ExperimentReport:
    """Outcome of an experiment: criteria, measurements and tables."""

    name: str
    config: dict
    criteria: list = field(default_factory=list)
    measurements: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    runtime_s: float = 0.0

    def check(self, label: str, paper_eq: str, value: float, bound: float, relation: str = "<=") -> Criterion:
        c = Criterion(label, paper_eq, float(value), float(bound), relation)
        self.criteria.append(c)
        return c

    def table(self, name: str, header: list, rows: list) -> None:
        self.tables[name] = {"header": list(header), "rows": [list(r) for r in rows]}

    @property
    def passed(self) -> bool:
        return bool(self.criteria) and all(c.passed for c in self.criteria) and not self.flags

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "config": _jsonable(self.config),
            "criteria": [c.to_dict() for c in self.criteria],
            "measurements": _jsonable(self.measurements),
            "flags": list(self.flags),
            "passed": self.passed,
            "runtime_s": self.runtime_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False, allow_nan=False)

    def write(self, outdir) -> list[Path]:
        """Write ``<name>.json`` and one ``<name>_<table>.csv`` per table."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = [outdir / f"{self.name}.json"]
        paths[0].write_text(self.to_json())
        for tname in sorted(self.tables):
            tab = self.tables[tname]
            path = outdir / f"{self.name}_{tname}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(tab["header"])
                for row in tab["rows"]:
                    w.writerow([_csv_cell(v) for v in row])
            paths.append(path)
        return paths

    def summary_lines(self) -> list[str]:
        out = []
        for c in self.criteria:
            mark = "PASS" if c.passed else "FAIL"
            out.append(f"{mark} {self.name}: {c.label} = {c.value:.6g} {c.relation} {c.bound:.6g}")
        for f in self.flags:
            out.append(f"FLAG {self.name}: {f}")
        return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# ---------------------------------------------------------------------------
# data, norms and parallel map


def _pmap(fn: Callable, items: list) -> list:
    """Map in worker processes (``ARTIFACT_THREADS``); results keep input order."""
    n = min(workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _unit_field(grid: Grid, seed: int, components: int, s: float, kmax: float | None) -> Field:
    """Seeded field normalised to ``max|f| = 1`` on the master lattice."""
    ref = Grid(grid.dim, max(grid.n, 256 if grid.dim == 2 else 64), grid.length)
    kref = kmax if kmax is not None else grid.dealias_fraction * grid.n / 2.0
    sup = float(np.max(magnitude(random_ensemble(ref, 1, s, seed, components, kref)[0].physical)))
    f = random_ensemble(grid, 1, s, seed, components, kmax)[0]
    return f * (1.0 / sup)


def default_data(grid: Grid, seed: int = 0, amp_a: float = 0.02, amp_u: float = 0.1,
                 kmax: float | None = 2.5, s_a: float = 1.0, s_u: float = 1.0) -> CnsState:
    """Smooth seeded datum with ``max|a0| = amp_a`` and ``max|u0| = amp_u``.

    ``kmax = None`` keeps every resolved mode (a datum with a tail whose
    decay is set by ``s_a`` and ``s_u``).
    """
    a = _unit_field(grid, 1000 + seed, 1, s_a, kmax) * amp_a
    u = _unit_field(grid, 2000 + seed, grid.dim, s_u, kmax) * amp_u
    return CnsState(a, u)


def perturbation(grid: Grid, seed: int = 0, amp_a: float = 0.02, amp_u: float = 0.1,
                 kmax: float | None = 4.5) -> CnsState:
    """Fixed perturbation direction with the same amplitudes as the datum."""
    a = _unit_field(grid, 3000 + seed, 1, 1.0, kmax) * amp_a
    u = _unit_field(grid, 4000 + seed, grid.dim, 1.0, kmax) * amp_u
    return CnsState(a, u)


def _shift(base: CnsState, eta: CnsState, eps: float) -> CnsState:
    return CnsState(base.a + eta.a * eps, base.u + eta.u * eps)


def data_size(a: Field, u: Field, p: float, cutoff=None) -> float:
    """``||a||_{B^{d/p}_{p,1}} + ||u||_{B^{-1+d/p}_{p,1}}`` (the data norm)."""
    d = a.grid.dim
    js = a.grid.j_range
    na = aggregate(js, block_norm_values(a, [p])[p], d / p, 1.0, cutoff=cutoff)
    nu = aggregate(js, block_norm_values(u, [p])[p], d / p - 1.0, 1.0, cutoff=cutoff)
    return float(na + nu)


def _besov(f: Field, s: float, p: float, cutoff=None) -> float:
    return float(aggregate(f.grid.j_range, block_norm_values(f, [p])[p], s, 1.0, cutoff=cutoff))


def zp_norm(traj: Trajectory, p: float, omega=None, cutoff=None, tilde: bool = False) -> dict:
    """Parts of ``||(a, u)||_{Z_p(T)}``.

    ``a`` in ``L^inf_T B^{d/p}``, ``u`` in ``L^inf_T B^{-1+d/p}`` and
    ``L^1_T B^{1+d/p}`` (``r = 1``).  ``tilde`` switches the sup-in-time
    parts to the Chemin-Lerner form.  ``total`` is the sum.
    """
    d = traj.grid.dim
    T = float(traj.times[-1])
    if T <= 0:
        raise DataError("trajectory has no time extent")
    inf = TimeNormSpec(INF, T, tilde)
    one = TimeNormSpec(1.0, T, False)
    a_inf = spacetime_norm(traj, BesovIndex(d / p, p), inf, "a", omega, cutoff)
    u_inf = spacetime_norm(traj, BesovIndex(d / p - 1.0, p), inf, "u", omega, cutoff)
    u_one = spacetime_norm(traj, BesovIndex(d / p + 1.0, p), one, "u", omega, cutoff)
    return {"a_Linf": a_inf, "u_Linf": u_inf, "u_L1": u_one, "total": a_inf + u_inf + u_one}


def _diff(t1: Trajectory, t2: Trajectory) -> Trajectory:
    if len(t1) != len(t2) or np.any(np.abs(t1.times - t2.times) > 1e-12):
        raise DataError("trajectories sample different times")
    out = Trajectory(t1.grid)
    for i, t in enumerate(t1.times):
        out.append(float(t), **{n: Field(t1.grid, spectral=t1._data[n][i] - t2._data[n][i])
                                for n in t1.names})
    return out


def _time_series(traj: Trajectory, name: str, s: float, p: float, cutoff=None) -> np.ndarray:
    return np.asarray(aggregate(traj.grid.j_range, traj.norm_matrix(name, p), s, 1.0, cutoff=cutoff))


def _integral(times: np.ndarray, vals: np.ndarray) -> float:
    return float(trapezoid(vals, times)) if len(times) > 1 else 0.0


def _horizon(spec: ExperimentSpec, u0: Field) -> float:
    if spec.T is not None:
        return float(spec.T)
    return admissible_time(u0, spec.mu, spec.smallness or 0.05, spec.p, T_max=spec.T_max)


def _solve_job(job):
    state, cfg = job
    return cns_solve(state, cfg)


def _spread(values) -> float:
    """``max/min - 1`` of positive values (0 for a single value)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.any(v <= 0):
        return float("inf")
    return float(v.max() / v.min() - 1.0)


def _check_envelope_p(spec: ExperimentSpec) -> None:
    if not (1 <= spec.p < 2 * spec.d):
        raise PreconditionError(f"need 1 <= p < 2d, got p={spec.p}, d={spec.d}")


# ---------------------------------------------------------------------------
# criterion 1: Littlewood-Paley exactness


def run_lp_exactness(spec: ExperimentSpec) -> ExperimentReport:
    """Partition of unity, almost-orthogonality of blocks, Bony identity."""
    rep = ExperimentReport(spec.name, spec.to_dict())
    g = spec.grid()
    pou = float(np.max(np.abs(g.blocks.sum(axis=0) + g.low_multiplier(g.j_min) - 1.0)))
    rep.check("partition of unity", "PS", pou, spec.tol("partition", 1e-12))
    rng = np.random.default_rng(spec.seed)
    f = Field(g, physical=rng.standard_normal(g.shape))
    worst = 0.0
    for j in g.j_range:
        fj = lp_block(f, int(j))
        nj = np.linalg.norm(fj.spectral)
        for k in g.j_range:
            if abs(int(j) - int(k)) >= 2:
                worst = max(worst, float(np.linalg.norm(lp_block(fj, int(k)).spectral)) / max(nj, 1e-300))
    rep.check("block annihilation |j-k|>=2 (relative)", "S1fg", worst, spec.tol("annihilation", 1e-12))
    pairs = int(spec.param("pairs", 100))
    fs = random_ensemble(g, 2 * pairs, 1.0, spec.seed + 7)
    res = [bony_residual(fs[2 * i], fs[2 * i + 1]) for i in range(pairs)]
    rep.check(f"Bony reconstruction, max over {pairs} pairs", "fg", max(res), spec.tol("bony", 1e-10))
    rep.measurements.update(partition=pou, annihilation=worst, bony_max=max(res), bony_mean=float(np.mean(res)))
    return rep


# ---------------------------------------------------------------------------
# criterion 2: heat / Lame


def _heat_ratio(g: Grid, u0: Field, f: Field, mu: float, T: float, dt: float, s: float, p: float,
                rho1: float) -> float:
    """``mu^{1/rho1} ||u||_{L~^rho1 B^{s+2/rho1}} / (||u0||_{B^s} + mu^{-1} ||f||_{L~^1 B^s})``."""
    traj = heat_solve(u0, f, mu, T, dt)
    up = 0.0 if math.isinf(rho1) else 2.0 / rho1
    lhs = spacetime_norm(traj, BesovIndex(s + up, p), TimeNormSpec(rho1, T, True), "u")
    fn = T * _besov(f, s, p)  # constant forcing: L~^1_T B^{s-2+2} norm
    rhs = _besov(u0, s, p) + fn / mu
    return (mu ** (0.0 if math.isinf(rho1) else 1.0 / rho1)) * lhs / rhs


def run_heat_lame(spec: ExperimentSpec) -> ExperimentReport:
    """Closed-form decay per mode and the maximal-regularity ratio under refinement."""
    rep = ExperimentReport(spec.name, spec.to_dict())
    g = spec.grid()
    T = spec.T or 0.5
    mu, lam = spec.mu, spec.lam
    u0 = random_ensemble(g, 1, 0.0, spec.seed, components=g.dim)[0]
    uh0 = u0.spectral
    heat = heat_solve(u0, None, mu, T, spec.dt)
    lame = lame_solve(u0, None, Viscosity(mu, lam), T, spec.dt)
    k2 = g.k2
    kk = np.where(k2 > 0, k2, 1.0)
    q0 = g.k * (np.sum(g.k * uh0, axis=0) / kk)
    p0 = uh0 - q0
    err_h = err_l = 0.0
    for i, t in enumerate(heat.times):
        exact = np.exp(-mu * k2 * t) * uh0
        err_h = max(err_h, _rel_mode_error(heat.spectral("u")[i], exact))
        exact_l = np.exp(-mu * k2 * t) * p0 + np.exp(-(2 * mu + lam) * k2 * t) * q0
        err_l = max(err_l, _rel_mode_error(lame.spectral("u")[i], exact_l))
    rep.check("heat f=0 per-mode relative error", "heat", err_h, spec.tol("closed_form", 1e-12))
    rep.check("Lame f=0 per-mode relative error", "plame", err_l, spec.tol("closed_form", 1e-12))
    # maximal regularity ratio, rho = 1, under N -> 2N
    count = int(spec.param("ensemble", 4))
    s = float(spec.param("s", spec.d / spec.p - 1.0))
    decay = float(spec.param("decay", 2.5))
    dt = float(spec.param("ratio_dt", 2e-3))
    n0 = int(spec.param("ratio_N", 32))
    rows = []
    for rho1 in (1.0, 2.0, INF):
        ratios = []
        for n in (n0, 2 * n0):
            gn = Grid(spec.d, n)
            us = random_ensemble(gn, count, decay, spec.seed + 11)
            fs = random_ensemble(gn, count, decay, spec.seed + 12)
            ratios.append(max(_heat_ratio(gn, us[i], fs[i], mu, T, dt, s, spec.p, rho1) for i in range(count)))
        rel = abs(ratios[1] / ratios[0] - 1.0)
        rows.append([_rho_label(rho1), ratios[0], ratios[1], rel])
        rep.check(f"max-regularity ratio drift N->2N, rho1={_rho_label(rho1)}", "heatm", rel,
                  spec.tol("refinement", 0.2))
    rep.table("max_regularity", ["rho1", f"ratio_N{n0}", f"ratio_N{2 * n0}", "relative_change"], rows)
    rep.measurements.update(heat_error=err_h, lame_error=err_l,
                            ratios={r[0]: [r[1], r[2]] for r in rows})
    return rep


def _rel_mode_error(num: np.ndarray, exact: np.ndarray) -> float:
    scale = np.max(np.abs(exact), axis=0)
    mask = scale > 1e-200
    if not np.any(mask):
        return 0.0
    err = np.max(np.abs(num - exact), axis=0)
    return float(np.max(err[mask] / scale[mask]))


def _rho_label(r: float) -> str:
    return "inf" if math.isinf(r) else f"{r:g}"


# ---------------------------------------------------------------------------
# criterion 3: transport


def _transport_ratio(g: Grid, a0: Field, f: Field, v: Field, lam: float, T: float, dt: float,
                     s: float, p: float) -> float:
    """Transport estimate ratio with unit constants in the exponent and prefactor."""
    traj = transport_solve(a0, v, f, lam, T, dt)
    idx = BesovIndex(s, p)
    lhs = (spacetime_norm(traj, idx, TimeNormSpec(INF, T, True), "a")
           + lam * spacetime_norm(traj, idx, TimeNormSpec(1.0, T, True), "a"))
    d = g.dim
    grad = Field(g, spectral=(1j * g.k[:, None] * v.spectral[None]).reshape((-1,) + g.shape))
    gb = float(np.max(2.0 ** (g.j_range * d / p) * block_norm_values(grad, [p])[p]))
    V = T * (gb + float(np.max(magnitude(grad.physical))))
    rhs = math.exp(V) * (_besov(a0, s, p) + T * _besov(f, s, p))
    return lhs / rhs


def run_transport(spec: ExperimentSpec) -> ExperimentReport:
    """Rotation oracle, the transport estimate ratio under refinement, commutator checks."""
    rep = ExperimentReport(spec.name, spec.to_dict())
    n_rot = int(spec.param("rotation_N", 128))
    dt_rot = float(spec.param("rotation_dt", 1e-3))
    period = 2.0 * math.pi
    g = Grid(2, n_rot)
    c = g.length / 2.0
    v = rotation_field(g)
    w = 0.15

    def blob(x):
        return np.exp(-((x[0] - c - 0.4) ** 2 + (x[1] - c) ** 2) / (2 * w * w))

    a0 = Field.from_function(g, blob)
    traj = transport_solve(a0, v, T=period, dt=dt_rot, save_every=10**9)
    a1 = traj.final("a").physical[0]
    l2 = lambda arr: math.sqrt(float(np.mean(arr * arr)))
    drift = abs(l2(a1) - l2(a0.physical[0])) / l2(a0.physical[0])
    back = rotate_points(g.x.reshape(2, -1), -period, c)
    oracle = blob(back).reshape(g.shape)
    err = float(np.max(np.abs(a1 - oracle)))
    rep.check("rotation L2 drift over one period", "TDep", drift, spec.tol("rotation_drift", 1e-6))
    rep.measurements.update(rotation_drift=drift, rotation_max_error=err)
    # transport estimate ratio
    n0 = int(spec.param("ratio_N", 32))
    count = int(spec.param("ensemble", 4))
    s = float(spec.param("s", 0.5))
    lam = float(spec.param("damping", 0.5))
    T = float(spec.param("ratio_T", 1.0))
    dt = float(spec.param("ratio_dt", 1e-2))
    ratios = []
    for n in (n0, 2 * n0):
        gn = Grid(2, n)
        vn = rotation_field(gn)
        a0s = random_ensemble(gn, count, 2.0, spec.seed + 21)
        fs = random_ensemble(gn, count, 2.0, spec.seed + 22)
        ratios.append(max(_transport_ratio(gn, a0s[i], fs[i], vn, lam, T, dt, s, spec.p)
                          for i in range(count)))
    rel = abs(ratios[1] / ratios[0] - 1.0)
    rep.check("transport estimate: fitted C drift N->2N", "transport", rel, spec.tol("refinement", 0.2))
    rep.table("transport_ratio", ["N", "fitted_C"], [[n0, ratios[0]], [2 * n0, ratios[1]]])
    # commutator with a constant field
    gc = spec.grid()
    const = Field(gc, physical=np.stack([np.full(gc.shape, 0.7 + 0.1 * i) for i in range(gc.dim)]))
    a = random_ensemble(gc, 1, 1.0, spec.seed + 23)[0]
    worst = 0.0
    for j in gc.j_range:
        cm = commutator(const, a, int(j))
        worst = max(worst, float(np.max(np.abs(cm.physical))) / float(np.max(np.abs(a.physical))))
    rep.check("commutator with constant v (relative)", "CR", worst, spec.tol("commutator", 1e-11))
    rep.measurements.update(transport_fitted_C=ratios, commutator_constant=worst)
    return rep


# ---------------------------------------------------------------------------
# criterion 4: envelope


def _block_masses(state: CnsState, p: float) -> np.ndarray:
    d = state.grid.dim
    js = state.grid.j_range
    va = block_norm_values(state.a, [p])[p]
    vu = block_norm_values(state.u, [p])[p]
    return 2.0 ** (js * d / p) * va + 2.0 ** (js * (d / p - 1.0)) * vu


def _family(spec: ExperimentSpec, grid: Grid, count: int) -> tuple[CnsState, list[CnsState], list[float]]:
    """``base + 2^{-n} eta`` for ``n = 1..count``; ``eta`` spans every resolved mode
    unless ``params["eta_kmax"]`` limits it."""
    base = default_data(grid, spec.seed)
    eta = perturbation(grid, spec.seed, kmax=spec.param("eta_kmax", None))
    sizes = [2.0 ** (-n) for n in range(1, count + 1)]
    return base, [_shift(base, eta, e) for e in sizes], sizes


def run_envelope(spec: ExperimentSpec) -> ExperimentReport:
    """Greedy weight on ``2^{-i}`` and uniform weighted data norms of a family."""
    rep = ExperimentReport(spec.name, spec.to_dict())
    M = int(spec.param("length", 12))
    A = 2.0 ** (-np.arange(M + 1))
    om = build_weight([A], delta0=0.5, tail_mass=2.0 ** (-M))
    K = len(om.thresholds)
    expected_thr = [1] + [k + 2 for k in range(1, K)]
    i = np.arange(M + 1)
    expected_w = np.where(i >= 3, 2.0 ** ((i - 2) / 2.0), 1.0)
    thr_ok = list(om.thresholds) == expected_thr and K >= M - 1
    werr = float(np.max(np.abs(om.values - expected_w)))
    rep.check("N_k = k + 2 mismatches", "weight", 0.0 if thr_ok else 1.0, 0.0)
    rep.check("omega_i = 2^{(i-2)/2} max error", "weight", werr, 0.0)
    rep.check("validate(omega)", "deft", 1.0 if validate(om) else 0.0, 1.0, ">=")
    count = int(spec.param("family", 10))
    g = spec.grid()
    base, fam, _ = _family(spec, g, count)
    seqs = [_block_masses(s, spec.p) for s in fam]
    lim = _block_masses(base, spec.p)
    omega = build_weight(seqs, lim, delta0=spec.delta0)
    masses = [weighted_mass(omega, a) for a in seqs + [lim]]
    bound = uniform_bound(seqs + [lim], omega)
    rep.check("validate(family weight)", "deft", 1.0 if validate(omega) else 0.0, 1.0, ">=")
    rep.check(f"sup weighted data norm over {count} members", "au-ini-omega", max(masses), bound)
    rep.table("family", ["member", "weighted_mass"], [[n + 1, m] for n, m in enumerate(masses[:-1])])
    rep.measurements.update(thresholds=list(om.thresholds), family_thresholds=list(omega.thresholds),
                            family_weight=omega.values, weighted_masses=masses, uniform_bound=bound)
    return rep


# ---------------------------------------------------------------------------
# criterion 5: tail estimate


def run_tail_estimate(spec: ExperimentSpec) -> ExperimentReport:
    """Weighted a priori bound and the uniform high-frequency tail of a family."""
    _check_envelope_p(spec)
    rep = ExperimentReport(spec.name, spec.to_dict())
    g = spec.grid()
    count = int(spec.param("family", 10))
    base, fam, sizes = _family(spec, g, count)
    p = spec.p
    seqs = [_block_masses(s, p) for s in fam]
    lim = _block_masses(base, p)
    omega = build_weight(seqs, lim, delta0=spec.delta0)
    T = _horizon(spec, base.u)
    cfg = spec.solver_config(T, save_every=int(spec.param("save_every", 2)), norm_ps=(p,))
    trajs = _pmap(_solve_job, [(s, cfg) for s in [base] + fam])
    weighted = [zp_norm(t, p, omega=omega, tilde=True)["total"] for t in trajs]
    C4 = max(weighted)
    eps = float(spec.param("eps_fraction", 0.1)) * C4
    rep.measurements.update(C4=C4, eps=eps, T=T, thresholds=list(omega.thresholds),
                            weight=omega.values, weighted_norms=weighted)
    try:
        N = tail_cutoff(omega, C4, eps, g.j_min)
    except RangeError as exc:
        rep.flags.append(f"RangeError: {exc}")
        return rep
    wN = omega[N]
    rows = []
    worst = 0.0
    for n, t in enumerate(trajs):
        plain = zp_norm(t, p, cutoff=(">", N))["total"]
        tilde = zp_norm(t, p, cutoff=(">", N), tilde=True)["total"]
        wtail = zp_norm(t, p, omega=omega, cutoff=(">", N), tilde=True)["total"]
        chain = [plain, tilde, wtail / wN, C4 / wN, eps]
        ok = all(chain[i] <= chain[i + 1] * (1 + 1e-12) + 1e-300 for i in range(4))
        worst = max(worst, plain / (C4 / wN))
        rows.append([n, 0.0 if n == 0 else sizes[n - 1]] + chain + [ok])
    rep.check("max_n ||P_{>N}(a^n,u^n)||_Z / (C4/omega_N)", "highfresmall", worst, 1.0)
    rep.check("chain members violating the ordering", "highfresmall",
              float(sum(not r[-1] for r in rows)), 0.0)
    rep.check("C4/omega_N vs eps", "highfreN", C4 / wN, eps)
    rep.table("tail", ["member", "size", "tail_Z", "tail_tilde", "weighted_tail_over_omegaN",
                       "C4_over_omegaN", "eps", "chain_holds"], rows)
    rep.measurements.update(N=N, omega_N=wN)
    return rep


# ---------------------------------------------------------------------------
# criterion 6: Lagrangian difference


def run_lagrangian_difference(spec: ExperimentSpec) -> ExperimentReport:
    """Lipschitz ratio of ``||u^n - u||_{L^1 L^inf}`` and the interpolation chain."""
    _check_envelope_p(spec)
    rep = ExperimentReport(spec.name, spec.to_dict())
    g = spec.grid()
    p = spec.p
    base = default_data(g, spec.seed)
    eta = perturbation(g, spec.seed)
    T = _horizon(spec, base.u)
    cfg = spec.solver_config(T, save_every=int(spec.param("save_every", 2)), norm_ps=(p,))
    states = [_shift(base, eta, e) for e in spec.eps]
    trajs = _pmap(_solve_job, [(s, cfg) for s in [base] + states])
    ref = trajs[0]
    flow_ref = integrate_flow(ref)
    rows, ratios = [], []
    chain_bad = flow_bad = 0
    for e, st, tr in zip(spec.eps, states, trajs[1:]):
        dn = data_size(st.a - base.a, st.u - base.u, p)
        r = lagrangian_difference(tr, ref, p, flow2=flow_ref, data_norm=dn)
        ratios.append(r["lipschitz_ratio"])
        chain_bad += 0 if r["chain_holds"] else 1
        flow_bad += 0 if r["flow_comparison"] <= r["flow_bound_besov"] * (1 + 1e-12) else 1
        rows.append([e, dn, r["eulerian_L1Linf"], r["lipschitz_ratio"], r["zp"] / dn] + list(r["chain"])
                    + [r["flow_comparison"], r["flow_bound_besov"]])
    rep.check("Lipschitz ratio spread max/min - 1", "L1Linfi", _spread(ratios), spec.tol("lipschitz", 0.3))
    rep.check("runs violating the interpolation chain", "infinite", float(chain_bad), 0.0)
    rep.check("runs violating the flow comparison bound", "unlinfin", float(flow_bad), 0.0)
    rep.table("lipschitz", ["eps", "data_norm", "L1Linf_diff", "lipschitz_ratio", "lagrangian_Z_ratio",
                            "chain_L1Linf", "chain_L2Linf", "chain_L2B", "chain_geom",
                            "flow_comparison", "flow_bound"], rows)
    rep.measurements.update(T=T, lipschitz_ratios=ratios)
    return rep


# ---------------------------------------------------------------------------
# low-frequency difference


def _lowfreq_terms(t1: Trajectory, t2: Trajectory, p: float, m0: int) -> dict:
    """Both sides of the low-frequency difference estimate (unit constant)."""
    g = t1.grid
    d = g.dim
    diff = _diff(t2, t1)
    lo, hi = ("<=", m0), (">", m0)
    lhs = zp_norm(diff, p, cutoff=lo, tilde=True)["total"]
    da0, du0 = diff.field("a", 0), diff.field("u", 0)
    data_lo = _besov(da0, d / p, p, lo) + _besov(du0, d / p - 1.0, p, lo)
    times = t1.times
    du_inf = np.array([float(np.max(magnitude(ifft(g, c)))) for c in diff._data["u"]])
    du_l1linf = _integral(times, du_inf)
    a1_sup = float(np.max(_time_series(t1, "a", d / p, p)))
    hi_parts = zp_norm(diff, p, cutoff=hi)
    alpha = (1.0 + _time_series(t1, "u", d / p + 1.0, p) + _time_series(t2, "u", d / p + 1.0, p)
             + _time_series(t1, "u", d / p, p) ** 2 + _time_series(t2, "u", d / p, p) ** 2)
    ialpha = _integral(times, alpha)
    inner = (data_lo + 2.0**m0 * du_l1linf * a1_sup + hi_parts["u_L1"]
             + ialpha * (hi_parts["a_Linf"] + hi_parts["u_Linf"]))
    rhs = math.exp(ialpha) * inner
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0, "data_low": data_lo,
            "freq_term": 2.0**m0 * du_l1linf * a1_sup, "high_L1": hi_parts["u_L1"],
            "alpha_integral": ialpha}


def run_lowfreq_difference(spec: ExperimentSpec) -> ExperimentReport:
    """Low-frequency part of a difference against the right-hand side terms."""
    _check_envelope_p(spec)
    rep = ExperimentReport(spec.name, spec.to_dict())
    g = spec.grid()
    p = spec.p
    base = default_data(g, spec.seed)
    eta = perturbation(g, spec.seed)
    T = _horizon(spec, base.u)
    cfg = spec.solver_config(T, save_every=int(spec.param("save_every", 2)), norm_ps=(p,))
    eps = list(spec.eps[: int(spec.param("members", 3))])
    trajs = _pmap(_solve_job, [(s, cfg) for s in [base] + [_shift(base, eta, e) for e in eps]])
    m0s = [int(m) for m in spec.param("m0", [2, 4, 6]) if g.j_min <= int(m) <= g.j_max]
    rows, fitted = [], {}
    for m0 in m0s:
        rs = []
        for e, tr in zip(eps, trajs[1:]):
            t = _lowfreq_terms(trajs[0], tr, p, m0)
            rs.append(t["ratio"])
            rows.append([m0, e, t["lhs"], t["rhs"], t["ratio"], t["data_low"], t["freq_term"],
                         t["high_L1"], t["alpha_integral"]])
        fitted[m0] = max(rs)
        rep.check(f"fitted C spread across the family, m0={m0}", "diff-1ow", _spread(rs),
                  spec.tol("family", 0.2))
    # one constant for every m0: the looseness of the right side grows with 2^m0,
    # so the ratio itself is not expected to be constant in m0
    cs = list(fitted.values())
    rep.check(f"max_m0 fitted C / C at m0={m0s[0]}", "diff-1ow", max(cs) / cs[0], 1.0 + 1e-12)
    rep.measurements["m0_spread"] = _spread(cs)
    same = _lowfreq_terms(trajs[0], trajs[0], p, m0s[0])
    rep.check("identical solutions: LHS", "diff-1ow", same["lhs"], 0.0)
    rep.table("lowfreq", ["m0", "eps", "lhs", "rhs", "ratio", "data_low", "2^m0_term", "high_L1",
                          "alpha_integral"], rows)
    rep.measurements.update(T=T, fitted_C=fitted)
    return rep


# ---------------------------------------------------------------------------
# criterion 7: continuity sweep


def run_continuity_sweep(spec: ExperimentSpec) -> ExperimentReport:
    """``D_m = ||S_T(data_m) - S_T(data)||_{Z_p(T)}`` along ``eps_m -> 0``."""
    ps = [float(q) for q in (spec.param("ps", None) or [spec.p])]
    for q in ps:
        _check_envelope_p(replace(spec, p=q))
    rep = ExperimentReport(spec.name, spec.to_dict())
    g = spec.grid()
    base = default_data(g, spec.seed)
    eta = perturbation(g, spec.seed)
    T = _horizon(spec, base.u)
    K = int(spec.param("K", 3))
    slack = spec.tol("monotone_slack", 0.1)
    final = spec.tol("final_fraction", 1e-3)
    states = [_shift(base, eta, e) for e in spec.eps]
    if spec.smallness is not None:
        for q in ps:
            for st in [base] + states:
                na = _besov(st.a, spec.d / q, q)
                if na > spec.smallness:
                    raise PreconditionError(f"||a0||_B^(d/p)_(p,1) = {na:.4g} exceeds {spec.smallness} at p={q}")
    # the solves do not depend on p once the smallness check is done
    cfg = spec.solver_config(T, save_every=int(spec.param("save_every", 2)), smallness=None)
    trajs = _pmap(_solve_job, [(s, cfg) for s in [base] + states])
    diffs = [_diff(tr, trajs[0]) for tr in trajs[1:]]
    rows = []
    for q in ps:
        D, worst_split = [], 0.0
        for e, diff in zip(spec.eps, diffs):
            full = zp_norm(diff, q)["total"]
            low = zp_norm(diff, q, cutoff=("<=", K))["total"]
            high = zp_norm(diff, q, cutoff=(">", K))["total"]
            worst_split = max(worst_split, full - low - high)
            D.append(full)
            rows.append([q, e, full, low, high])
        D = np.array(D)
        growth = float(np.max(D[1:] / ((1.0 + slack) * D[:-1]))) if D.size > 1 else 0.0
        rep.check(f"p={q:g}: max D_m+1 / ((1 + slack) D_m)", "highfrediffer", growth, 1.0)
        rep.check(f"p={q:g}: D_last / D_1", "lowerdiffer", float(D[-1] / D[0]), final)
        rep.check(f"p={q:g}: D - (low + high)", "highfrediffer", worst_split, 1e-12)
        slope = np.polyfit(np.log(spec.eps), np.log(D), 1)[0] if D.size > 1 else float("nan")
        rep.measurements[f"p={q:g}"] = {"D": D, "empirical_rate": float(slope)}
    rep.measurements["T"] = T
    rep.measurements["K"] = K
    rep.table("sweep", ["p", "eps", "D", "D_low", "D_high"], rows)
    return rep


# ---------------------------------------------------------------------------
# criterion 8: Bona-Smith


def _mollify(state: CnsState, N: int) -> CnsState:
    g = state.grid
    m = g.low_multiplier(N + 1)
    return CnsState(Field(g, spectral=state.a.spectral * m), Field(g, spectral=state.u.spectral * m))


def _persistence(traj: Trajectory, p: float) -> float:
    d = traj.grid.dim
    times = traj.times
    a_hi = float(np.max(_time_series(traj, "a", 1.0 + d / p, p)))
    u_mid = float(np.max(_time_series(traj, "u", d / p, p)))
    u_top = _integral(times, _time_series(traj, "u", 2.0 + d / p, p))
    return a_hi + u_mid + u_top


def _zdiff(t1: Trajectory, t2: Trajectory, p: float) -> float:
    return zp_norm(_diff(t1, t2), p)["total"]


def _is_identity(state: CnsState, N: int) -> bool:
    """True when the level-``N`` mollification leaves ``state`` unchanged."""
    m = _mollify(state, N)
    return bool(np.array_equal(m.a.spectral, state.a.spectral)
                and np.array_equal(m.u.spectral, state.u.spectral))


def _bs_stats(base, other, S, St, SN, StN, N: int, p: float) -> dict:
    d = base.a.grid.dim
    mb, mo = _mollify(base, N), _mollify(other, N)
    ta, tu = base.a - mb.a, base.u - mb.u
    a_N = _time_series(SN, "a", 1.0 + d / p, p)
    a_N_sq = _integral(SN.times, a_N ** 2)
    dd_N = data_size(mo.a - mb.a, mo.u - mb.u, p)
    term1, term2, term3 = _zdiff(S, SN, p), _zdiff(SN, StN, p), _zdiff(St, StN, p)
    tail = data_size(ta, tu, p)
    rhs_c = tail + float(np.max(a_N)) * (_besov(ta, d / p - 1.0, p) + _besov(tu, d / p - 2.0, p))
    rhs_b = math.exp(a_N_sq) * dd_N
    nan = float("nan")
    return {
        "persistence": _persistence(SN, p),
        "lodiffb": term2 / rhs_b if rhs_b > 0 else nan, "lodiffc": term1 / rhs_c if rhs_c > 0 else nan,
        "term1": term1, "term2": term2, "term3": term3, "tail": tail,
        "data_diff": data_size(other.a - base.a, other.u - base.u, p), "data_diff_N": dd_N,
        "exp_factor": math.exp(a_N_sq), "total": _zdiff(S, St, p),
    }


def _bs_sweep(spec: ExperimentSpec, grid: Grid, levels: list[int], delta: float, kmax=None) -> dict:
    """Exact and mollified solves for a datum and its ``delta``-perturbation.

    Levels where the mollification is the identity reuse the exact solves.
    """
    p, d = spec.p, spec.d
    base = default_data(grid, spec.seed, kmax=kmax, s_a=d / p + 1.0, s_u=d / p)
    other = _shift(base, perturbation(grid, spec.seed), delta)
    T = _horizon(spec, base.u)
    cfg = spec.solver_config(T, save_every=int(spec.param("save_every", 2)), norm_ps=(p,))
    live = [n for n in levels if not (_is_identity(base, n) and _is_identity(other, n))]
    jobs = [(base, cfg), (other, cfg)]
    for n in live:
        jobs += [(_mollify(base, n), cfg), (_mollify(other, n), cfg)]
    trajs = _pmap(_solve_job, jobs)
    S, St = trajs[0], trajs[1]
    sol = {n: (S, St) for n in levels}
    for i, n in enumerate(live):
        sol[n] = (trajs[2 + 2 * i], trajs[3 + 2 * i])
    X0 = data_size(base.a, base.u, p)
    out = {}
    for n in levels:
        r = _bs_stats(base, other, S, St, sol[n][0], sol[n][1], n, p)
        r["identity"] = n not in live
        r["persistence_ratio"] = r["persistence"] / (2.0**n * X0)
        out[n] = r
    return {"T": T, "levels": out, "base": base, "cfg": cfg, "S": S, "sol": sol}


def run_bona_smith(spec: ExperimentSpec) -> ExperimentReport:
    """Mollified-data comparison: persistence, two difference ratios and the budget."""
    if spec.d < 3 or not (1 <= spec.p < spec.d):
        raise PreconditionError(f"Bona-Smith needs d >= 3 and 1 <= p < d, got d={spec.d}, p={spec.p}")
    rep = ExperimentReport(spec.name, spec.to_dict())
    levels = [int(n) for n in spec.param("levels", [2, 3, 4])]
    probe = float(spec.param("probe", 1e-2))
    fine_g = Grid(spec.d, spec.N)
    coarse_g = Grid(spec.d, int(spec.param("coarse_N", spec.N // 2)))
    main = _bs_sweep(spec, fine_g, levels, probe)
    lv = main["levels"]
    pr = [lv[n]["persistence_ratio"] for n in levels]
    rep.check("persistence: max_N ratio / fitted C (smallest N)", "unau", max(pr) / pr[0], 1.0 + 1e-12)
    live = [n for n in levels if not lv[n]["identity"]]
    for n in levels:
        if lv[n]["identity"]:
            # mollification is the identity: the tail and the first difference vanish
            rep.check(f"identity level N={n}: tail + first difference", "lodiffc",
                      lv[n]["tail"] + lv[n]["term1"], 0.0)
    finite = bool(live) and all(math.isfinite(lv[n][k]) and lv[n][k] > 0
                                for n in live for k in ("lodiffb", "lodiffc"))
    rep.check(f"lodiffb and lodiffc ratios finite and positive, N in {live}", "lodiffb",
              1.0 if finite else 0.0, 1.0, ">=")
    # refinement: one band-limited datum resolved exactly by both grids
    kref = float(spec.param("refine_kmax", 5.0))
    ref_c = _bs_sweep(spec, coarse_g, live, probe, kmax=kref)["levels"]
    shared = [n for n in live if not ref_c[n]["identity"]]
    ref_f = _bs_sweep(spec, fine_g, shared, probe, kmax=kref)["levels"]
    ref_rows = []
    for n in shared:
        for key in ("lodiffb", "lodiffc"):
            drift = abs(ref_f[n][key] / ref_c[n][key] - 1.0)
            rep.check(f"{key} ratio drift grid {coarse_g.n}->{fine_g.n}, N={n}", key, drift,
                      spec.tol("refinement", 0.2))
        ref_rows.append([n, ref_c[n]["lodiffb"], ref_f[n]["lodiffb"], ref_c[n]["lodiffc"],
                         ref_f[n]["lodiffc"], ref_f[n]["tail"]])
    rep.table("refinement", ["N", f"lodiffb_grid{coarse_g.n}", f"lodiffb_grid{fine_g.n}",
                             f"lodiffc_grid{coarse_g.n}", f"lodiffc_grid{fine_g.n}", "tail_X"], ref_rows)
    rep.table("levels", ["N", "identity", "persistence", "persistence_ratio", "lodiffb", "lodiffc",
                         "tail_X", "exp_factor", "term1", "term2", "term3"],
              [[n, int(lv[n]["identity"]), lv[n]["persistence"], lv[n]["persistence_ratio"],
                lv[n]["lodiffb"], lv[n]["lodiffc"], lv[n]["tail"], lv[n]["exp_factor"],
                lv[n]["term1"], lv[n]["term2"], lv[n]["term3"]] for n in levels])
    rep.measurements.update(T=main["T"], levels=lv, refinement={"fine": ref_f, "coarse": ref_c},
                            persistence_C=pr[0])
    if not live:
        rep.flags.append("every mollification level is the identity on this grid")
        return rep
    # the epsilon budget
    margin = float(spec.param("constant_margin", 1.25))
    Cc = margin * max(lv[n]["lodiffc"] for n in live)
    Cb = margin * max(lv[n]["lodiffb"] for n in live)
    budget = float(spec.param("budget_eps", 0.0)) or 8.0 * Cc * lv[live[len(live) // 2]]["tail"]
    chosen = next((n for n in live if Cc * lv[n]["tail"] <= budget / 8.0), None)
    rep.measurements.update(C_lodiffc=Cc, C_lodiffb=Cb, budget_eps=budget)
    if chosen is None:
        rep.flags.append("no mollification level meets the eps/8 share")
        return rep
    r = lv[chosen]
    # perturbation size meeting the eps/2 share for the middle term and the eps/4 bound
    unit_N, unit = r["data_diff_N"] / probe, r["data_diff"] / probe
    delta = min(budget / 2.0 / (Cb * r["exp_factor"] * unit_N), budget / 4.0 / (Cc * unit))
    base, cfg, S = main["base"], main["cfg"], main["S"]
    SN = main["sol"][chosen][0]
    other = _shift(base, perturbation(fine_g, spec.seed), delta)
    St, StN = _pmap(_solve_job, [(other, cfg), (_mollify(other, chosen), cfg)])
    final = _bs_stats(base, other, S, St, SN, StN, chosen, spec.p)
    shares = [(final["term1"], budget / 8.0, "au0"), (final["term2"], budget / 2.0, "au1"),
              (final["term3"], 3.0 * budget / 8.0, "au2")]
    for k, (val, cap, lab) in enumerate(shares):
        rep.check(f"budget term {k + 1} at N={chosen}", lab, val, cap)
    rep.check("total difference vs eps", "au00", final["total"], budget)
    rep.table("budget", ["N", "delta", "eps", "term1", "term2", "term3", "total"],
              [[chosen, delta, budget, final["term1"], final["term2"], final["term3"], final["total"]]])
    rep.measurements.update(budget_level=chosen, budget_delta=delta, budget_terms=final)
    return rep


# ---------------------------------------------------------------------------
# criterion 9: counterexample


def counterexample_solution(uh0: np.ndarray, t: float, threshold: float = 1.0,
                            phase: float = math.pi) -> np.ndarray:
    """Closed-form solution ``exp(i t V(|u0|^2)) u0`` with a step ``V``."""
    V = np.where(np.abs(uh0) ** 2 >= threshold, phase, 0.0)
    return np.exp(1j * t * V) * uh0


def run_counterexample(spec: ExperimentSpec) -> ExperimentReport:
    """Data straddling the threshold of the step nonlinearity."""
    rep = ExperimentReport(spec.name, spec.to_dict())
    threshold = float(spec.param("threshold", 1.0))
    phase = float(spec.param("phase", math.pi))
    eps_list = [float(e) for e in spec.param("eps_list", [1e-2, 1e-3, 1e-4])]
    n = int(spec.param("N", 16))
    times = np.linspace(0.0, float(spec.param("T", 1.0)), int(spec.param("samples", 101)))
    rng = np.random.default_rng(spec.seed)
    shape = (n,) * spec.d
    background = 0.5 * math.sqrt(threshold) * rng.random(shape) * np.exp(2j * math.pi * rng.random(shape))
    mode = (1,) + (0,) * (spec.d - 1)
    uh0 = background.copy()
    uh0[mode] = math.sqrt(threshold)
    rows = []
    worst_mod = 0.0
    for e in eps_list:
        vh0 = uh0.copy()
        vh0[mode] = (1.0 - e) * math.sqrt(threshold)
        data_dist = float(np.sqrt(np.sum(np.abs(uh0 - vh0) ** 2)))
        dist = 0.0
        for t in times:
            u, v = counterexample_solution(uh0, t, threshold, phase), counterexample_solution(vh0, t, threshold, phase)
            dist = max(dist, float(np.sqrt(np.sum(np.abs(u - v) ** 2))))
            worst_mod = max(worst_mod, float(np.max(np.abs(np.abs(u) - np.abs(uh0)))),
                            float(np.max(np.abs(np.abs(v) - np.abs(vh0)))))
        gap = abs(math.sqrt(threshold) * np.exp(1j * phase) - (1.0 - e) * math.sqrt(threshold))
        rows.append([e, data_dist, dist, gap])
        rep.check(f"eps={e:g}: sup_t L2 distance vs 2 - eps", "eq:ODE", dist, (2.0 - e) * (1 - 1e-14), ">=")
        rep.check(f"eps={e:g}: |data distance - eps|", "eq:ODE", abs(data_dist - e), 1e-14)
    rep.check("modulus conservation", "eq:ODE", worst_mod, spec.tol("modulus", 1e-12))
    # away from the threshold the map is Lipschitz: distance equals data distance
    far = 0.5 * background
    shifted = far * (1.0 + 1e-3)
    lip = max(float(np.sqrt(np.sum(np.abs(counterexample_solution(far, t, threshold, phase)
                                         - counterexample_solution(shifted, t, threshold, phase)) ** 2)))
              for t in times)
    rep.check("away from the threshold: distance / data distance", "eq:ODE",
              lip / float(np.sqrt(np.sum(np.abs(far - shifted) ** 2))), 1.0 + 1e-12)
    rep.table("distances", ["eps", "data_distance", "solution_distance", "closed_form_gap"], rows)
    rep.measurements.update(modulus_error=worst_mod)
    return rep


# ---------------------------------------------------------------------------
# criterion 10: solver hygiene


def _drifts(traj: Trajectory) -> tuple[float, float]:
    m = np.array([mass(a) for a in traj.fields("a")])
    mo = np.array([momentum(a, u) for a, u in zip(traj.fields("a"), traj.fields("u"))])
    return float(np.max(np.abs(m - m[0]))), float(np.max(np.abs(mo - mo[0])))


def _restrict(c: np.ndarray, fine: Grid, coarse: Grid) -> np.ndarray:
    """Coefficients of ``fine`` at the non-Nyquist modes of ``coarse``."""
    freqs = np.fft.fftfreq(coarse.n, 1.0 / coarse.n).astype(int)
    idx = np.ix_(*[np.mod(freqs, fine.n)] * coarse.dim)
    return c[(slice(None),) + idx] * ~coarse.nyquist_mask


def _restricted_distance(t1: Trajectory, t2: Trajectory, onto: Grid, times: np.ndarray) -> float:
    """``sup_t`` L2 distance of two runs on the modes of ``onto``."""
    worst = 0.0
    for t in times:
        tot = 0.0
        for name in ("a", "u"):
            parts = []
            for tr in (t1, t2):
                j = int(np.argmin(np.abs(tr.times - t)))
                if abs(tr.times[j] - t) > 1e-9:
                    raise DataError("sample times do not nest")
                parts.append(_restrict(tr._data[name][j], tr.grid, onto))
            tot += float(np.sum(np.abs(parts[0] - parts[1]) ** 2))
        worst = max(worst, math.sqrt(tot))
    return worst


def run_solver_hygiene(spec: ExperimentSpec) -> ExperimentReport:
    """Conservation under dt refinement and self-convergence of the solver."""
    rep = ExperimentReport(spec.name, spec.to_dict())
    g = spec.grid()
    base = default_data(g, spec.seed)
    T = _horizon(spec, base.u)
    dts = [spec.dt, spec.dt / 2.0]
    trajs = _pmap(_solve_job, [(base, replace(spec.solver_config(T), dt=dt)) for dt in dts])
    (m1, p1), (m2, p2) = _drifts(trajs[0]), _drifts(trajs[1])
    floor = spec.tol("drift_floor", 1e-12)
    order = spec.tol("drift_ratio", 0.625)
    for lab, a, b in (("mass", m1, m2), ("momentum", p1, p2)):
        val = 0.0 if b <= floor else b / a
        rep.check(f"{lab} drift ratio dt/2 vs dt (0 below {floor:g})", "eulercauchy", val, order)
    rep.table("drift", ["dt", "mass_drift", "momentum_drift"], [[dts[0], m1, p1], [dts[1], m2, p2]])
    n = int(spec.param("convergence_N", 32))
    dtc = float(spec.param("convergence_dt", spec.dt))
    grids = [Grid(spec.d, n // 2), Grid(spec.d, n), Grid(spec.d, 2 * n)]
    cfgs = [spec.solver_config(T, dt=2 * dtc), spec.solver_config(T, dt=dtc), spec.solver_config(T, dt=dtc / 2)]
    cfgs = [replace(c, save_every=s) for c, s in zip(cfgs, (1, 2, 4))]
    runs = _pmap(_solve_job, [(default_data(gg, spec.seed), c) for gg, c in zip(grids, cfgs)])
    times = runs[0].times
    e_coarse = _restricted_distance(runs[1], runs[0], grids[0], times)
    e_fine = _restricted_distance(runs[2], runs[1], grids[0], times)
    rep.check("self-convergence: ||(2N,dt/2)-(N,dt)|| / ||(N,dt)-(N/2,2dt)||", "eulercauchy",
              e_fine / e_coarse if e_coarse > 0 else 0.0, 0.5)
    rep.table("self_convergence", ["pair", "distance"], [["(N,dt)-(N/2,2dt)", e_coarse],
                                                        ["(2N,dt/2)-(N,dt)", e_fine]])
    rep.measurements.update(T=T, mass_drift=[m1, m2], momentum_drift=[p1, p2],
                            self_convergence=[e_coarse, e_fine])
    return rep


# ---------------------------------------------------------------------------
# registry


EXPERIMENTS: dict[str, Callable[[ExperimentSpec], ExperimentReport]] = {
    "lp_exactness": run_lp_exactness,
    "heat_lame": run_heat_lame,
    "transport": run_transport,
    "envelope": run_envelope,
    "tail_estimate": run_tail_estimate,
    "lagrangian_difference": run_lagrangian_difference,
    "lowfreq_difference": run_lowfreq_difference,
    "continuity_sweep": run_continuity_sweep,
    "bona_smith": run_bona_smith,
    "counterexample": run_counterexample,
    "solver_hygiene": run_solver_hygiene,
}

_DEFAULTS: dict[str, dict] = {
    "heat_lame": {"N": 32, "dt": 1e-2},
    "transport": {"N": 32},
    "tail_estimate": {"N": 128, "delta0": 0.9, "params": {"save_every": 4}},
    "lagrangian_difference": {"eps": (1e-2, 1e-3, 1e-4)},
    "lowfreq_difference": {"eps": (1e-2, 1e-3, 1e-4)},
    "continuity_sweep": {"params": {"ps": [1.0, 2.0, 3.0]}},
    "bona_smith": {"d": 3, "p": 2.0, "N": 32, "dt": 1e-2, "T": 0.1, "eps": (1e-2,)},
    "counterexample": {"eps": (1e-2, 1e-3, 1e-4)},
    "solver_hygiene": {"dt": 1e-2},
}


def default_spec(name: str, **overrides) -> ExperimentSpec:
    """The default configuration of a named experiment with overrides applied."""
    if name not in EXPERIMENTS:
        raise DataError(f"unknown experiment {name!r}; valid: {', '.join(sorted(EXPERIMENTS))}")
    base = dict(_DEFAULTS.get(name, {}))
    params = dict(base.pop("params", {}))
    params.update(overrides.pop("params", {}) or {})
    base.update(overrides)
    return ExperimentSpec(name=name, params=params, **base)


def run(spec: ExperimentSpec | str, **overrides) -> ExperimentReport:
    """Run a named experiment; the runtime is recorded on the report."""
    if isinstance(spec, str):
        spec = default_spec(spec, **overrides)
    if spec.name not in EXPERIMENTS:
        raise DataError(f"unknown experiment {spec.name!r}; valid: {', '.join(sorted(EXPERIMENTS))}")
    t0 = time.perf_counter()
    rep = EXPERIMENTS[spec.name](spec)
    rep.runtime_s = time.perf_counter() - t0
    return rep

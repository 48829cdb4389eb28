"""
Time integrators for heat, Lamé, transport and barotropic compressible flow.

The compressible system is solved in the variables ``a = rho - 1`` and ``u``::

    a_t + u . grad a = -(1 + a) div u
    u_t - A u        = -u . grad u - I(a) A u - kappa grad G(a)

with ``A = mu Lap + (mu + lambda) grad div``, ``I(a) = a/(1+a)`` and
``G'(a) = P'(1+a)/(1+a)``.  One step is a Strang splitting: half a
semi-Lagrangian step for ``a``, one exponential (ETDRK2) step for ``u`` with
the exact Lamé propagator, and another half step for ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .besov import aggregate, block_norm_values
from .errors import (DomainError, EllipticityError, PreconditionError, ShapeError,
                     StepRejected, VacuumError)
from .spectral import (Field, Grid, SpectralInterpolator, dealias, evaluate, fft, ifft,
                       magnitude)
from .trajectory import Trajectory

__all__ = [
    "PressureLaw",
    "Viscosity",
    "CnsState",
    "SolverConfig",
    "phi1",
    "phi2",
    "heat_solve",
    "lame_solve",
    "lame_multiplier",
    "transport_solve",
    "commutator",
    "cns_solve",
    "cns_rhs",
    "admissible_time",
    "mass",
    "momentum",
    "rotation_field",
    "rotate_points",
    "angular_velocity",
]


@dataclass(frozen=True)
class PressureLaw:
    """``P(rho) = rho^gamma / gamma`` so that ``P'(1) = 1``; ``scale`` multiplies the pressure."""

    gamma: float = 1.4
    scale: float = 1.0

    def P(self, rho):
        return np.asarray(rho, dtype=float) ** self.gamma / self.gamma

    def dP(self, rho):
        return np.asarray(rho, dtype=float) ** (self.gamma - 1.0)

    def G(self, a):
        a = np.asarray(a, dtype=float)
        if self.gamma == 1.0:
            return np.log1p(a)
        return np.expm1((self.gamma - 1.0) * np.log1p(a)) / (self.gamma - 1.0)

    def dG(self, a):
        a = np.asarray(a, dtype=float)
        return self.dP(1.0 + a) / (1.0 + a)

    @staticmethod
    def I(a):
        a = np.asarray(a, dtype=float)
        return a / (1.0 + a)


@dataclass(frozen=True)
class Viscosity:
    mu: float = 0.5
    lam: float = 0.5

    def __post_init__(self):
        if not (self.mu > 0 and 2 * self.mu + self.lam > 0):
            raise EllipticityError(f"need mu > 0 and 2 mu + lambda > 0, got mu={self.mu}, lambda={self.lam}")

    @property
    def bulk(self) -> float:
        """``2 mu + lambda``, the rate on gradient fields."""
        return 2.0 * self.mu + self.lam

    @property
    def lower(self) -> float:
        return min(self.mu, self.bulk)


@dataclass(frozen=True)
class CnsState:
    a: Field
    u: Field

    def __post_init__(self):
        if self.a.grid != self.u.grid:
            raise ShapeError("a and u live on different grids")
        if self.a.components != 1 or self.u.components != self.u.grid.dim:
            raise ShapeError("a must be scalar and u a d-vector")
        if np.min(1.0 + self.a.physical) <= 0:
            raise VacuumError("1 + a must be positive")

    @property
    def grid(self) -> Grid:
        return self.a.grid


@dataclass(frozen=True)
class SolverConfig:
    """Settings of :func:`cns_solve`.

    ``smallness`` is the bound on ``||a0||_{B^{d/p}_{p,1}}`` (``None`` skips
    the check), ``margin`` the vacuum margin, ``cfl`` the bound on
    ``dt max|u| N / L``.  ``norm_ps`` lists exponents whose block norms are
    cached on the trajectory.
    """

    dt: float = 5e-3
    T: float = 0.5
    viscosity: Viscosity = field(default_factory=Viscosity)
    pressure: PressureLaw = field(default_factory=PressureLaw)
    p: float = 2.0
    smallness: float | None = 0.05
    margin: float = 0.5
    cfl: float = 0.5
    save_every: int = 1
    norm_ps: tuple = ()

    def __post_init__(self):
        if not (0 < self.dt <= self.T):
            raise DomainError(f"need 0 < dt <= T, got dt={self.dt}, T={self.T}")


def phi1(z: np.ndarray) -> np.ndarray:
    """``(1 - exp(-z)) / z`` with the limit 1 at 0."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = -np.expm1(-z[nz]) / z[nz]
    return out


def phi2(z: np.ndarray) -> np.ndarray:
    """``(z - 1 + exp(-z)) / z**2`` with a series near 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small]
    out[small] = 0.5 - zs / 6 + zs**2 / 24 - zs**3 / 120 + zs**4 / 720 - zs**5 / 5040
    zb = z[~small]
    out[~small] = (zb + np.expm1(-zb)) / zb**2
    return out


def _steps(T: float, dt: float) -> tuple[int, float]:
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    return n, T / n


def _forcing(f, grid: Grid, components: int):
    """Normalise a forcing description into ``t -> spectral array``."""
    if f is None:
        zero = np.zeros((components,) + grid.shape, dtype=complex)
        return lambda t: zero
    if isinstance(f, Field):
        return lambda t: f.spectral
    if isinstance(f, Trajectory):
        name = f.names[0]
        return lambda t: f.at_time(name, t)
    if callable(f):
        def call(t):
            v = f(t)
            return v.spectral if isinstance(v, Field) else np.asarray(v)
        return call
    raise TypeError("forcing must be None, a Field, a Trajectory or a callable of t")


def _diagonal_solve(u0: Field, rates: np.ndarray, split, forcing, T: float, dt: float,
                    save_every: int, name: str) -> Trajectory:
    """Exponential integrator for ``u' = -L u + f`` with ``L`` diagonal after ``split``.

    ``rates`` has shape ``(m, n, ..., n)``; ``split(uh)`` returns the ``m``
    parts of ``uh`` on which ``L`` acts as multiplication by ``rates[i]``.
    The forcing is taken linear in time on each step (exact when constant).
    """
    n, dt = _steps(T, dt)
    z = rates * dt
    E, P1, P2 = np.exp(-z), phi1(z) * dt, phi2(z) * dt
    fget = _forcing(forcing, u0.grid, u0.components)
    traj = Trajectory(u0.grid, {"T": T, "dt": dt})
    uh = np.array(u0.spectral)
    traj.append(0.0, **{name: u0})
    f0 = fget(0.0)
    for k in range(1, n + 1):
        t1 = k * dt
        f1 = fget(t1)
        parts_u, parts_f0, parts_d = split(uh), split(f0), split(f1 - f0)
        uh = sum(E[i] * parts_u[i] + P1[i] * parts_f0[i] + P2[i] * parts_d[i]
                 for i in range(len(parts_u)))
        f0 = f1
        if k % save_every == 0 or k == n:
            traj.append(t1, **{name: Field(u0.grid, spectral=uh)})
    return traj


def heat_solve(u0: Field, forcing=None, mu: float = 1.0, T: float = 1.0, dt: float = 1e-2,
               save_every: int = 1) -> Trajectory:
    """Solve ``u_t - mu Lap u = f`` exactly per Fourier mode.

    ``forcing`` may be ``None``, a :class:`Field` (constant in time), a
    callable ``t -> Field`` or a :class:`Trajectory`.
    """
    if not mu > 0:
        raise DomainError("heat solver needs mu > 0")
    rates = (mu * u0.grid.k2)[None]
    return _diagonal_solve(u0, rates, lambda uh: [uh], forcing, T, dt, save_every, "u")


def _pq_split(grid: Grid):
    k = grid.k
    k2 = grid.k2.copy()
    k2.flat[0] = 1.0

    def split(uh):
        q = k * (np.sum(k * uh, axis=0) / k2)
        return [uh - q, q]
    return split


def lame_multiplier(grid: Grid, visc: Viscosity) -> np.ndarray:
    """Rates ``(mu |k|^2, (2 mu + lambda) |k|^2)`` on the ``P`` and ``Q`` parts."""
    return np.stack([visc.mu * grid.k2, visc.bulk * grid.k2])


def lame_solve(u0: Field, forcing=None, viscosity: Viscosity | None = None, T: float = 1.0,
               dt: float = 1e-2, save_every: int = 1) -> Trajectory:
    """Solve ``u_t - mu Lap u - (lambda + mu) grad div u = f`` exactly per mode.

    The divergence-free part decays at rate ``mu |k|^2`` and the gradient
    part at ``(2 mu + lambda) |k|^2``.
    """
    visc = viscosity or Viscosity()
    if u0.components != u0.grid.dim:
        raise ShapeError("Lamé solver needs a vector field")
    return _diagonal_solve(u0, lame_multiplier(u0.grid, visc), _pq_split(u0.grid), forcing,
                           T, dt, save_every, "u")


def _velocity(v, grid: Grid):
    """Normalise a velocity description into ``(t -> spectral array, stationary)``."""
    if isinstance(v, Field):
        return (lambda t: v.spectral), True
    if isinstance(v, Trajectory):
        name = "u" if "u" in v.names else v.names[0]
        return (lambda t: v.at_time(name, t)), False
    if callable(v):
        def call(t):
            w = v(t)
            return w.spectral if isinstance(w, Field) else np.asarray(w)
        return call, False
    raise TypeError("velocity must be a Field, a Trajectory or a callable of t")


def _points(grid: Grid) -> np.ndarray:
    return grid.x.reshape(grid.dim, -1)


def _cfl_check(grid: Grid, vmax: float, dt: float, cfl: float) -> None:
    if dt * vmax * grid.n / grid.length > cfl:
        raise StepRejected(f"dt={dt:.3g} with max|v|={vmax:.3g} exceeds the CFL bound {cfl}")


def _departure_rk4(grid: Grid, vget, t1: float, dt: float, x: np.ndarray) -> np.ndarray:
    """Backward characteristic from ``(t1, x)`` to ``t1 - dt`` by classical RK4."""
    def vel(t, y):
        return evaluate(grid, vget(t), y)
    k1 = vel(t1, x)
    k2 = vel(t1 - dt / 2, x - dt / 2 * k1)
    k3 = vel(t1 - dt / 2, x - dt / 2 * k2)
    k4 = vel(t1 - dt, x - dt * k3)
    return x - dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def transport_solve(a0: Field, v, forcing=None, damping: float = 0.0, T: float = 1.0,
                    dt: float = 1e-2, save_every: int = 1, cfl: float = 0.5) -> Trajectory:
    """Semi-Lagrangian solver for ``a_t + v . grad a + lambda a = f``.

    Departure points come from an RK4 integration of the backward
    characteristic with spectrally interpolated ``v``; the advected field is
    evaluated there by trigonometric interpolation.  Damping is applied with
    the exact factor ``exp(-lambda dt)`` and the source by the trapezoid rule
    along the characteristic.  A step violating ``dt max|v| N / L <= cfl``
    is retried as two half steps.
    """
    grid = a0.grid
    if damping < 0:
        raise DomainError("damping must be nonnegative")
    vget, stationary = _velocity(v, grid)
    fget = _forcing(forcing, grid, a0.components)
    n, dt = _steps(T, dt)
    x = _points(grid)
    traj = Trajectory(grid, {"T": T, "dt": dt, "damping": damping})
    traj.append(0.0, a=a0)
    ah = np.array(a0.spectral)
    cache: dict[float, SpectralInterpolator] = {}

    vmax_fixed = float(np.max(magnitude(ifft(grid, vget(0.0))))) if stationary else None

    def substep(ah, t0, h):
        vmax = vmax_fixed if stationary else float(np.max(magnitude(ifft(grid, vget(t0 + h)))))
        _cfl_check(grid, vmax, h, cfl)
        if stationary:
            interp = cache.get(h)
            if interp is None:
                interp = SpectralInterpolator(grid, _departure_rk4(grid, vget, t0 + h, h, x),
                                              ntrans=a0.components)
                cache[h] = interp
            at_dep = lambda c: interp(c)
        else:
            xd = _departure_rk4(grid, vget, t0 + h, h, x)
            at_dep = lambda c: evaluate(grid, c, xd)
        decay = math.exp(-damping * h)
        vals = decay * at_dep(ah)
        f0, f1 = fget(t0), fget(t0 + h)
        if np.any(f0) or np.any(f1):
            vals = vals + 0.5 * h * (ifft(grid, f1).reshape(vals.shape) + decay * at_dep(f0))
        return fft(grid, vals.reshape((a0.components,) + grid.shape))

    def advance(ah, t0, h, depth=0):
        try:
            return substep(ah, t0, h)
        except StepRejected:
            if depth > 20:
                raise
            mid = advance(ah, t0, h / 2, depth + 1)
            return advance(mid, t0 + h / 2, h / 2, depth + 1)

    for k in range(1, n + 1):
        ah = advance(ah, (k - 1) * dt, dt)
        if k % save_every == 0 or k == n:
            traj.append(k * dt, a=Field(grid, spectral=ah))
    return traj


def _advect_term(v: Field, a_phys_grad: np.ndarray) -> np.ndarray:
    """Physical ``v . grad a`` for gradient values of shape ``(d, c, ...)``."""
    return np.sum(v.physical[:, None] * a_phys_grad, axis=0)


def commutator(v: Field, a: Field, j: int) -> Field:
    """``v . grad(Delta_j a) - Delta_j(v . grad a)``, dealiased."""
    if v.grid != a.grid or v.components != v.grid.dim:
        raise ShapeError("commutator needs a d-vector v and a field a on one grid")
    grid = a.grid
    blk = grid.block(j)
    grad = lambda spec: ifft(grid, 1j * grid.k[:, None] * spec[None])
    first = _advect_term(v, grad(a.spectral * blk))
    second = fft(grid, _advect_term(v, grad(a.spectral))) * blk
    out = (fft(grid, first) - second) * grid.dealias_mask
    return Field(grid, spectral=out)


def mass(a: Field) -> float:
    """``mean(1 + a)`` (normalised measure)."""
    return 1.0 + float(a.mean[0])


def momentum(a: Field, u: Field) -> np.ndarray:
    """``mean((1 + a) u)`` per component."""
    return np.mean((1.0 + a.physical) * u.physical, axis=tuple(range(1, u.grid.dim + 1)))


class _CnsStepper:
    """Precomputed operators for one grid and configuration."""

    def __init__(self, grid: Grid, cfg: SolverConfig):
        self.grid, self.cfg = grid, cfg
        v = cfg.viscosity
        self.k = grid.k
        self.k2 = grid.k2
        self.mask = grid.dealias_mask
        self.split = _pq_split(grid)
        self.rates = lame_multiplier(grid, v)
        self.x = _points(grid)
        self._coef = {}

    def coefficients(self, dt: float):
        if dt not in self._coef:
            z = self.rates * dt
            self._coef[dt] = (np.exp(-z), phi1(z) * dt, phi2(z) * dt)
        return self._coef[dt]

    def lame(self, uh: np.ndarray) -> np.ndarray:
        """Spectral ``A u``."""
        v = self.cfg.viscosity
        div = np.sum(self.k * uh, axis=0)
        return -v.mu * self.k2 * uh - (v.mu + v.lam) * self.k * div

    def nonlinear(self, ah: np.ndarray, uh: np.ndarray) -> np.ndarray:
        """Spectral ``-u . grad u - I(a) A u - kappa grad G(a)``, dealiased."""
        g = self.grid
        u = ifft(g, uh)
        a = ifft(g, ah)[0]
        if np.min(1.0 + a) < self.cfg.margin / 2:
            raise VacuumError(f"min(1 + a) = {np.min(1.0 + a):.4g} below half the margin")
        gradu = ifft(g, 1j * self.k[:, None] * uh[None])  # (d_dir, d_comp, ...)
        adv = np.sum(u[:, None] * gradu, axis=0)
        Au = ifft(g, self.lame(uh))
        Ia = PressureLaw.I(a)
        pres = self.cfg.pressure
        Gh = fft(g, pres.G(a)[None])[0]
        out = fft(g, -adv - Ia[None] * Au) - pres.scale * 1j * self.k * Gh
        return out * self.mask

    def transport_half(self, ah: np.ndarray, uh: np.ndarray, tau: float) -> np.ndarray:
        """Half step of ``a_t + u . grad a = -(1 + a) div u`` with ``u`` frozen.

        Midpoint departure points; ``1 + a`` is multiplied by the exponential
        of the trapezoid average of ``-div u`` along the characteristic.
        """
        g = self.grid
        u = ifft(g, uh).reshape(g.dim, -1)
        divh = np.sum(1j * self.k * uh, axis=0)[None]
        mid = self.x - 0.5 * tau * u
        # departure velocity only moves the foot point; 1e-11 is ample there
        xd = self.x - tau * evaluate(g, uh, mid, eps=1e-11)
        vals = evaluate(g, np.concatenate([ah, divh]), xd)
        a_dep, d_dep = vals[0], vals[1]
        d_here = ifft(g, divh).reshape(-1)
        rho = (1.0 + a_dep) * np.exp(-0.5 * tau * (d_here + d_dep))
        out = fft(g, (rho - 1.0).reshape((1,) + g.shape))
        return out * self.mask

    def step(self, ah: np.ndarray, uh: np.ndarray, dt: float):
        E, P1, P2 = self.coefficients(dt)
        ah = self.transport_half(ah, uh, dt / 2)
        n0 = self.nonlinear(ah, uh)
        pu, pn = self.split(uh), self.split(n0)
        ustar = sum(E[i] * pu[i] + P1[i] * pn[i] for i in range(2))
        n1 = self.nonlinear(ah, ustar)
        pd = self.split(n1 - n0)
        unew = ustar + sum(P2[i] * pd[i] for i in range(2))
        unew = unew * self.mask
        ah = self.transport_half(ah, unew, dt / 2)
        amin = float(np.min(1.0 + ifft(self.grid, ah)))
        if amin < self.cfg.margin / 2:
            raise VacuumError(f"min(1 + a) = {amin:.4g} below half the margin")
        return ah, unew


def cns_rhs(state: CnsState, cfg: SolverConfig) -> Field:
    """Spectral nonlinear forcing of the velocity equation at ``state``."""
    st = _CnsStepper(state.grid, cfg)
    return Field(state.grid, spectral=st.nonlinear(np.array(state.a.spectral), np.array(state.u.spectral)))


def data_norm(f: Field, s: float, p: float) -> float:
    vals = block_norm_values(f, [p])[p]
    return float(aggregate(f.grid.j_range, vals, s, 1.0))


def cns_solve(s0: CnsState, cfg: SolverConfig) -> Trajectory:
    """Integrate the barotropic system from ``s0`` up to ``cfg.T``.

    Raises
    ------
    PreconditionError
        ``1 + a0`` below the margin or ``a0`` outside the smallness ball.
    VacuumError
        ``min(1 + a)`` drops below half the margin during the run.
    """
    grid = s0.grid
    d = grid.dim
    amin = float(np.min(1.0 + s0.a.physical))
    if amin < cfg.margin:
        raise PreconditionError(f"min(1 + a0) = {amin:.4g} is below the margin {cfg.margin}")
    if cfg.smallness is not None:
        na = data_norm(s0.a, d / cfg.p, cfg.p)
        if na > cfg.smallness:
            raise PreconditionError(f"||a0||_B^(d/p)_(p,1) = {na:.4g} exceeds the smallness bound {cfg.smallness}")
    st = _CnsStepper(grid, cfg)
    n, dt = _steps(cfg.T, cfg.dt)
    meta = {"dt": dt, "T": cfg.T, "mu": cfg.viscosity.mu, "lambda": cfg.viscosity.lam,
            "gamma": cfg.pressure.gamma, "pressure_scale": cfg.pressure.scale, "p": cfg.p}
    traj = Trajectory(grid, meta)
    if cfg.norm_ps:
        traj.cache_norms(cfg.norm_ps)
    ah = np.array(dealias(s0.a).spectral)
    uh = np.array(dealias(s0.u).spectral)
    traj.append(0.0, a=Field(grid, spectral=ah), u=Field(grid, spectral=uh))

    def advance(ah, uh, h, depth=0):
        vmax = float(np.max(magnitude(ifft(grid, uh))))
        try:
            _cfl_check(grid, vmax, h, cfg.cfl)
        except StepRejected:
            if depth > 20:
                raise
            ah, uh = advance(ah, uh, h / 2, depth + 1)
            return advance(ah, uh, h / 2, depth + 1)
        return st.step(ah, uh, h)

    for k in range(1, n + 1):
        ah, uh = advance(ah, uh, dt)
        if k % cfg.save_every == 0 or k == n:
            traj.append(k * dt, a=Field(grid, spectral=ah), u=Field(grid, spectral=uh))
    return traj


def admissible_time(u0: Field, mu: float, c: float = 0.05, p: float = 2.0, kappa: float = 0.25,
                    T_max: float = 1.0, tol: float = 1e-10) -> float:
    """Largest ``T <= T_max`` with
    ``sum_j (1 - exp(-C0 4^j T)) 2^{j(d/p - 1)} ||Delta_j u0||_p <= c / (1 + ||u0||_{B^{d/p}_{p,1}})``,
    ``C0 = kappa mu``, found by bisection.
    """
    grid = u0.grid
    d = grid.dim
    vals = block_norm_values(u0, [p])[p]
    js = grid.j_range.astype(float)
    target = c / (1.0 + float(aggregate(grid.j_range, vals, d / p, 1.0)))
    w = 2.0 ** (js * (d / p - 1.0)) * vals
    C0 = kappa * mu

    def lhs(T):
        return float(np.sum(-np.expm1(-C0 * 4.0**js * T) * w))

    if lhs(T_max) <= target:
        return T_max
    lo, hi = 0.0, T_max
    while hi - lo > tol * T_max:
        mid = 0.5 * (lo + hi)
        if lhs(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def angular_velocity(r, omega: float = 1.0, radius: float = 1.6, order: int = 8):
    """Profile ``omega exp(-(r/radius)**order)`` of :func:`rotation_field`."""
    return omega * np.exp(-(np.asarray(r) / radius) ** order)


def rotation_field(grid: Grid, omega: float = 1.0, radius: float = 1.6, order: int = 8) -> Field:
    """Divergence-free swirl about the centre of a two-dimensional torus.

    ``v = w(r) (-(y - c), x - c)`` with ``w(r) = omega exp(-(r/radius)**order)``:
    close to a rigid rotation for ``r << radius`` and negligible at the
    boundary of the box.  Particles move on circles with angular speed
    ``w(r)``, which gives an exact flow map for testing.
    """
    if grid.dim != 2:
        raise ShapeError("the rotation field is defined in two dimensions")
    c = grid.length / 2.0
    X, Y = grid.x[0] - c, grid.x[1] - c
    w = angular_velocity(np.hypot(X, Y), omega, radius, order)
    return Field(grid, physical=np.stack([-w * Y, w * X]))


def rotate_points(points: np.ndarray, t: float, center: float, **profile) -> np.ndarray:
    """Exact positions after time ``t`` under :func:`rotation_field`."""
    y = points - center
    ang = t * angular_velocity(np.hypot(y[0], y[1]), **profile)
    c, s = np.cos(ang), np.sin(ang)
    return np.stack([c * y[0] - s * y[1], s * y[0] + c * y[1]]) + center

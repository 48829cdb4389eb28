"""Solve the compressible system from seeded data and inspect the result.

Writes a checkpoint to ``demo_out/`` and reloads it.  Run with
``python demos/solve_and_inspect.py``.
"""

from pathlib import Path

import numpy as np

from lpcns import Grid, PressureLaw, SolverConfig, Viscosity, cns_solve, load_checkpoint
from lpcns.besov import aggregate
from lpcns.experiments import default_data
from lpcns.solvers import admissible_time, mass, momentum

g = Grid(2, 64)
data = default_data(g, seed=0)
T = admissible_time(data.u, mu=0.5)
print(f"admissible time for this datum: T = {T:.4f}")

cfg = SolverConfig(dt=5e-3, T=min(T, 0.25), viscosity=Viscosity(0.5, 0.5),
                   pressure=PressureLaw(1.4), p=2.0, save_every=5, norm_ps=(2.0,))
traj = cns_solve(data, cfg)

js = g.j_range
na = aggregate(js, traj.norm_matrix("a", 2.0), 1.0, 1.0)
nu = aggregate(js, traj.norm_matrix("u", 2.0), 0.0, 1.0)
for t, x, y in zip(traj.times, na, nu):
    print(f"t = {t:.3f}  ||a||_B1 = {x:.4e}  ||u||_B0 = {y:.4e}")

a0, aT = traj.field("a", 0), traj.final("a")
print(f"mass drift {abs(mass(aT) - mass(a0)):.2e}, momentum drift "
      f"{np.max(np.abs(momentum(aT, traj.final('u')) - momentum(a0, traj.field('u', 0)))):.2e}")

out = Path("demo_out")
bin_path, _ = traj.save(out / "demo")
back = load_checkpoint(bin_path)
print(f"checkpoint round trip identical: {np.array_equal(back.spectral('u'), traj.spectral('u'))}")

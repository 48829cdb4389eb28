"""Greedy frequency envelope for a converging family.

For block masses ``A_i = 2^{-i}`` the thresholds come out as ``N_k = k + 2``
and the weight as ``omega_i = 2^{(i-2)/2}``.  Run with
``python demos/envelope_weight.py``.
"""

import numpy as np

from lpcns import build_weight, tail_cutoff, validate
from lpcns.envelope import uniform_bound

# stored masses stop at i = 23; the rest of the geometric series is tail_mass
A = 2.0 ** -np.arange(24)
omega = build_weight([A], A, delta0=0.5, tail_mass=2.0 ** -23)
print("thresholds N_k:", omega.thresholds[:8], "(N_0 = 1, then k + 2)")
print("omega_i       :", np.round(omega.values[:8], 6))
print("validate      :", validate(omega))

# A family approaching A from above keeps a uniform weighted mass.
family = [A * (1 + 2.0 ** -n) for n in range(1, 11)]
omega_f = build_weight(family, A, delta0=0.5)
print(f"uniform weighted mass over the family: {uniform_bound(family + [A], omega_f):.4f}")

# Cutoff that makes C / omega_N smaller than eps.
C = 1.0
for eps in (0.5, 0.1, 0.01):
    N = tail_cutoff(omega_f, C, eps)
    print(f"eps = {eps:<5g} -> N = {N:2d}, C/omega_N = {C / omega_f[N]:.4f}")

"""Dyadic blocks, Besov norms and the Bony split of a product.

Run with ``python demos/dyadic_blocks.py``.
"""

import numpy as np

from lpcns import BesovIndex, Grid, besov_norm, block_norms
from lpcns.paraproduct import bony_residual, para, random_ensemble, remainder
from lpcns.spectral import lp_block

g = Grid(2, 64)
f, h = random_ensemble(g, 2, s=1.0, seed=7, kmax=12.0)

# The blocks add back up to the field.
total = sum(lp_block(f, j).physical for j in g.j_range)
print(f"blocks j = {g.j_min}..{g.j_max}, reassembly error {np.max(np.abs(total - f.physical)):.2e}")

# Block norms feed every Besov norm; s shifts the weight 2^{js}.
series = block_norms(f, 2.0)
for j, v in series.as_dict().items():
    print(f"  ||Delta_{j} f||_2 = {v:.3e}")
for s in (0.0, 0.5, 1.0):
    print(f"B^{s:g}_(2,1) norm: {besov_norm(series, BesovIndex(s, 2.0, 1.0)):.4e}")

# f h = T_f h + T_h f + R(f, h) up to the dealiasing of the grid product.
lo_hi = np.max(np.abs(para(f, h).physical))
print(f"max |T_f h| = {lo_hi:.3e}, max |R(f, h)| = {np.max(np.abs(remainder(f, h).physical)):.3e}")
print(f"Bony residual: {bony_residual(f, h):.2e}")

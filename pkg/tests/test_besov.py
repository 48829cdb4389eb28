import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpcns.besov import (INF, BesovIndex, NormSeries, TimeNormSpec, aggregate, bernstein_ratio, besov_norm,
                         block_norms, spacetime_norm, trapezoid_weights)
from lpcns.envelope import AcceptableWeight
from lpcns.errors import BesovIndexError, DataError, DomainError, PreconditionError
from lpcns.paraproduct import random_ensemble
from lpcns.spectral import Field, Grid, lp_block, lp_norm, psi
from lpcns.trajectory import Trajectory

from conftest import mode, random_field


def _random_trajectory(grid, seed, count=6, T=1.0):
    rng = np.random.default_rng(seed)
    fields = random_ensemble(grid, count, 1.0, seed)
    traj = Trajectory(grid)
    for t, f in zip(np.linspace(0, T, count), fields):
        traj.append(t, u=f * float(rng.uniform(0.5, 2.0)))
    return traj


class TestIndices:
    def test_bad_exponent(self):
        with pytest.raises(DomainError):
            BesovIndex(0.0, 0.5)
        with pytest.raises(DomainError):
            TimeNormSpec(0.5, 1.0)

    def test_infinite_exponent(self):
        assert BesovIndex(0.0, INF, INF).p == math.inf

    def test_series_validation(self):
        with pytest.raises(DataError):
            NormSeries(2.0, [0, 1], [1.0])
        with pytest.raises(DataError):
            NormSeries(2.0, [0, 1], [1.0, -1.0])


class TestBlockNorms:
    def test_zero(self, grid2):
        s = block_norms(Field.zeros(grid2), 2.0)
        assert np.all(s.values == 0)

    def test_matches_grid_norm(self, grid2):
        f = random_field(grid2, seed=1)
        s = block_norms(f, 3.0)
        for j in grid2.j_range:
            ref = lp_norm(np.abs(lp_block(f, j).physical[0]), 3.0, 2)
            assert abs(s[j] - ref) <= 1e-13 * max(ref, 1e-300)

    def test_single_mode_sup_sum(self, grid2):
        f = mode(grid2, (5, 2), amplitude=1.7)
        s = block_norms(f, INF)
        kmag = math.hypot(5, 2)
        expected = [1.7 * float(psi(kmag / 2.0**j)) for j in grid2.j_range]
        assert np.allclose(s.values, expected, atol=1e-12)
        assert abs(s.values.sum() - 1.7) <= 1e-12

    def test_single_annulus_support(self, grid2):
        f = mode(grid2, (6, 0))
        s = block_norms(f, 2.0)
        nonzero = {int(j) for j, v in zip(s.js, s.values) if v > 1e-14}
        assert nonzero <= {1, 2, 3}

    def test_bad_p(self, grid2):
        with pytest.raises(DomainError):
            block_norms(random_field(grid2), 0.5)


class TestBesovNorm:
    def test_identity_weight(self, grid2):
        s = block_norms(random_field(grid2, seed=2), 2.0)
        idx = BesovIndex(0.5, 2.0, 1.0)
        assert besov_norm(s, idx, AcceptableWeight.identity(grid2.j_max)) == besov_norm(s, idx)

    def test_cutoff_partition(self, grid2):
        s = block_norms(random_field(grid2, seed=3), 2.0)
        idx = BesovIndex(1.0, 2.0, 1.0)
        full = besov_norm(s, idx)
        for m0 in grid2.j_range:
            parts = besov_norm(s, idx, cutoff=("<=", m0)) + besov_norm(s, idx, cutoff=(">", m0))
            assert abs(parts - full) <= 1e-13 * full

    def test_single_mode_sup_norm(self, grid2):
        s = block_norms(mode(grid2, (3, 3), amplitude=0.8), INF)
        assert abs(besov_norm(s, BesovIndex(0.0, INF, 1.0)) - 0.8) <= 1e-12

    def test_p_mismatch(self, grid2):
        s = block_norms(random_field(grid2), 2.0)
        with pytest.raises(BesovIndexError):
            besov_norm(s, BesovIndex(0.0, 3.0))

    def test_explicit_formula(self):
        js = np.arange(0, 4)
        vals = np.array([1.0, 0.5, 0.25, 0.125])
        s, r = 1.0, 2.0
        ref = math.sqrt(sum((2.0 ** (j * s) * v) ** r for j, v in zip(js, vals)))
        assert abs(float(aggregate(js, vals, s, r)) - ref) <= 1e-14

    def test_cutoff_monotone(self, grid2):
        s = block_norms(random_field(grid2, seed=4), 2.0)
        idx = BesovIndex(0.0, 2.0, 1.0)
        low = [besov_norm(s, idx, cutoff=("<=", m)) for m in grid2.j_range]
        high = [besov_norm(s, idx, cutoff=(">", m)) for m in grid2.j_range]
        assert np.all(np.diff(low) >= 0)
        assert np.all(np.diff(high) <= 0)

    def test_weight_monotone(self, grid2):
        s = block_norms(random_field(grid2, seed=5), 2.0)
        idx = BesovIndex(0.5, 2.0, 1.0)
        omega = AcceptableWeight.power(grid2.j_max, 0.5, 0.5)
        assert besov_norm(s, idx, omega) >= besov_norm(s, idx)


class TestSpacetime:
    def test_trapezoid(self):
        w = trapezoid_weights(np.array([0.0, 0.5, 1.0]))
        assert np.allclose(w, [0.25, 0.5, 0.25])

    def test_empty(self, grid2):
        with pytest.raises(DataError):
            spacetime_norm(Trajectory(grid2), BesovIndex(0, 2), TimeNormSpec(1, 1.0))

    def test_constant_in_time(self, grid2):
        f = random_field(grid2, seed=6)
        traj = Trajectory(grid2)
        for t in np.linspace(0, 2.0, 5):
            traj.append(t, u=f)
        idx = BesovIndex(0.5, 2.0, 1.0)
        spatial = besov_norm(block_norms(f, 2.0), idx)
        val = spacetime_norm(traj, idx, TimeNormSpec(1.0, 2.0))
        assert abs(val - 2.0 * spatial) <= 1e-12 * val

    def test_equal_exponents_agree(self, grid2):
        traj = _random_trajectory(grid2, 7)
        idx = BesovIndex(0.0, 2.0, 2.0)
        a = spacetime_norm(traj, idx, TimeNormSpec(2.0, 1.0, tilde=False))
        b = spacetime_norm(traj, idx, TimeNormSpec(2.0, 1.0, tilde=True))
        assert abs(a - b) <= 1e-12 * a

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), q=st.sampled_from([1.0, 2.0, 4.0, INF]))
    def test_minkowski_ordering(self, seed, q):
        traj = _random_trajectory(Grid(2, 16), seed)
        idx = BesovIndex(0.5, 2.0, 1.0)
        plain = spacetime_norm(traj, idx, TimeNormSpec(q, 1.0))
        tilde = spacetime_norm(traj, idx, TimeNormSpec(q, 1.0, tilde=True))
        assert plain <= tilde * (1 + 1e-12)


class TestBernstein:
    def test_pure_mode(self, grid2):
        f = mode(grid2, (3, 4))
        assert abs(bernstein_ratio(f, 1, 2.0, 2.0) - 1.0) <= 1e-12

    def test_zero(self, grid2):
        with pytest.raises(PreconditionError):
            bernstein_ratio(Field.zeros(grid2), 1, 2.0, 2.0)

    def test_not_band_limited(self, grid2):
        f = mode(grid2, (8, 0))
        with pytest.raises(PreconditionError):
            bernstein_ratio(f, 1, 2.0, 2.0, lam=4.0)

    def test_annulus_ratios_bounded(self):
        g = Grid(2, 64)
        uppers, lowers = [], []
        for lam in (2, 4, 8):
            for f in random_ensemble(g, 20, 0.0, seed=lam):
                blk = lp_block(f, int(math.log2(lam)))
                up, lo = bernstein_ratio(blk, 1, 2.0, INF, mode="annulus", lam=float(lam))
                uppers.append(up)
                lowers.append(lo)
        assert 0 < min(uppers) and max(uppers) < 10
        assert 0 < min(lowers) and max(lowers) < 10

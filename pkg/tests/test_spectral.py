import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpcns.errors import NumericalError, RangeError, ShapeError
from lpcns.spectral import (Field, Grid, dealias, divergence, gradient, helmholtz_project, high_pass,
                            low_pass, lp_block, lp_norm, phi, psi)

from conftest import mode, random_field


class TestGrid:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ShapeError):
            Grid(2, 24)

    def test_rejects_small(self):
        with pytest.raises(ShapeError):
            Grid(2, 4)

    def test_dyadic_range(self):
        assert Grid(2, 64).j_max == 6
        assert Grid(2, 128).j_max == 7
        assert Grid(3, 32).j_max == 5
        assert Grid(3, 16).j_max == 4
        assert Grid(2, 64).j_min == 0

    def test_integer_wavenumbers(self, grid2):
        assert np.all(np.abs(grid2.k) <= grid2.n / 2)
        assert np.allclose(grid2.k, np.round(grid2.k))


class TestCutoff:
    def test_phi_plateau_and_support(self):
        r = np.linspace(0, 1.5, 301)
        v = phi(r)
        assert np.all(v[r <= 0.5] == 1.0)
        assert np.all(v[r >= 1.0] == 0.0)
        assert np.all((v >= 0) & (v <= 1))

    def test_psi_annulus(self):
        r = np.linspace(0, 3, 601)
        v = psi(r)
        assert np.all(v >= 0)
        assert np.all(v[(r <= 0.5) | (r >= 2.0)] == 0.0)

    @pytest.mark.parametrize("n", [32, 64, 128])
    def test_partition_of_unity(self, n):
        g = Grid(2, n)
        total = g.blocks.sum(axis=0)
        nonzero = g.kmag > 0
        assert np.max(np.abs(total[nonzero] - 1.0)) <= 1e-12


class TestTransforms:
    def test_constant(self, grid2):
        f = Field(grid2, physical=np.full(grid2.shape, 3.5))
        c = f.spectral[0]
        assert abs(c[0, 0] - 3.5) < 1e-14
        c = c.copy()
        c[0, 0] = 0
        assert np.max(np.abs(c)) < 1e-14

    def test_pure_mode(self, grid2):
        f = mode(grid2, (3, 1))
        c = np.abs(f.spectral[0])
        big = np.argwhere(c > 1e-12)
        assert {tuple(i) for i in big} == {(3, 1), (grid2.n - 3, grid2.n - 1)}
        assert np.allclose(c[3, 1], 0.5)

    def test_round_trip(self, grid2):
        f = random_field(grid2, seed=3)
        back = Field(grid2, spectral=f.spectral).physical
        assert np.max(np.abs(back - f.physical)) <= 1e-12 * np.max(np.abs(f.physical))

    def test_non_finite(self, grid2):
        vals = np.zeros(grid2.shape)
        vals[0, 0] = np.nan
        with pytest.raises(NumericalError):
            Field(grid2, physical=vals)

    def test_plancherel(self, grid2):
        f = random_field(grid2, seed=4)
        lhs = np.mean(f.physical**2)
        rhs = np.sum(np.abs(f.spectral) ** 2)
        assert abs(lhs - rhs) <= 1e-12 * lhs


class TestBlocks:
    def test_out_of_range(self, grid2):
        f = random_field(grid2)
        with pytest.raises(RangeError):
            lp_block(f, grid2.j_max + 1)

    def test_far_mode_is_annihilated(self, grid2):
        f = mode(grid2, (9, 0))
        assert np.max(np.abs(lp_block(f, 1).spectral)) <= 1e-15

    def test_blocks_sum_to_mean_free_part(self, grid2):
        f = random_field(grid2, seed=5) + Field(grid2, physical=np.full(grid2.shape, 2.0))
        total = sum((lp_block(f, j) for j in grid2.j_range[1:]), lp_block(f, grid2.j_min))
        err = np.max(np.abs(total.physical - (f.physical - 2.0)))
        assert err <= 1e-12 * np.max(np.abs(f.physical))

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000), j=st.integers(0, 5), shift=st.integers(2, 5))
    def test_almost_orthogonal(self, seed, j, shift):
        g = Grid(2, 32)
        k = j + shift
        if k > g.j_max:
            return
        f = random_field(g, seed=seed)
        out = lp_block(lp_block(f, j), k)
        assert np.sqrt(np.sum(np.abs(out.spectral) ** 2)) <= 1e-12 * np.sqrt(np.sum(np.abs(f.spectral) ** 2))

    def test_low_high_split(self, grid2):
        f = random_field(grid2, seed=6)
        for m in range(grid2.j_min, grid2.j_max + 1):
            s = low_pass(f, m) + high_pass(f, m)
            assert np.max(np.abs(s.spectral - f.spectral)) <= 1e-15 * np.max(np.abs(f.spectral))

    def test_low_pass_is_block_sum(self, grid2):
        f = random_field(grid2, seed=7)
        m = 3
        ref = sum((lp_block(f, j) for j in range(grid2.j_min + 1, m)), lp_block(f, grid2.j_min))
        assert np.max(np.abs(low_pass(f, m).spectral - ref.spectral)) <= 1e-12

    def test_full_band_low_pass(self, grid2):
        f = random_field(grid2, seed=8)
        assert np.max(np.abs(low_pass(f, grid2.j_max + 2).spectral - f.spectral)) <= 1e-15

    def test_high_pass_below_range(self, grid2):
        f = random_field(grid2, seed=9) + Field(grid2, physical=np.ones(grid2.shape))
        h = high_pass(f, grid2.j_min - 1)
        assert np.max(np.abs(h.physical - (f.physical - 1.0))) <= 1e-12

    def test_product_support(self, grid2):
        f = random_field(Grid(2, 128), seed=10)
        g = f.grid
        k = 4
        prod = Field(g, physical=low_pass(f, k - 1).physical * lp_block(f, k).physical)
        for j in g.j_range:
            if abs(j - k) >= 5:
                assert np.max(np.abs(lp_block(prod, j).spectral)) <= 1e-12


class TestHelmholtz:
    def test_gradient_has_no_solenoidal_part(self, grid2):
        u = gradient(random_field(grid2, seed=11))
        p, _ = helmholtz_project(u)
        assert np.max(np.abs(p.spectral)) <= 1e-10

    def test_rotational_mode(self, grid2):
        u = Field.from_function(grid2, lambda x: (-np.sin(x[1]), np.sin(x[0])))
        _, q = helmholtz_project(u)
        assert np.max(np.abs(q.spectral)) <= 1e-10

    def test_divergence_free_per_mode(self, grid2):
        u = random_field(grid2, seed=12, components=2)
        p, q = helmholtz_project(u)
        assert np.max(np.abs(np.sum(grid2.k * p.spectral, axis=0))) <= 1e-12
        curl = grid2.k[0] * q.spectral[1] - grid2.k[1] * q.spectral[0]
        assert np.max(np.abs(curl)) <= 1e-10
        assert np.max(np.abs((p + q).spectral - u.spectral)) <= 1e-15

    def test_projector_algebra(self, grid3):
        u = random_field(grid3, seed=13, components=3)
        p, q = helmholtz_project(u)
        pp, pq = helmholtz_project(p)
        qp, qq = helmholtz_project(q)
        assert np.max(np.abs(pp.spectral - p.spectral)) <= 1e-10
        assert np.max(np.abs(qq.spectral - q.spectral)) <= 1e-10
        assert np.max(np.abs(pq.spectral)) <= 1e-10
        assert np.max(np.abs(qp.spectral)) <= 1e-10

    def test_scalar_rejected(self, grid2):
        with pytest.raises(ShapeError):
            helmholtz_project(random_field(grid2))

    def test_mean_goes_to_p(self, grid2):
        u = Field(grid2, physical=np.ones((2,) + grid2.shape))
        p, q = helmholtz_project(u)
        assert np.allclose(p.physical, 1.0)
        assert np.max(np.abs(q.spectral)) == 0.0


class TestMisc:
    def test_dealias_idempotent(self, grid2):
        f = random_field(grid2, seed=14)
        d1 = dealias(f)
        assert np.array_equal(dealias(d1).spectral, d1.spectral)

    def test_divergence_of_gradient_is_laplacian(self, grid2):
        f = mode(grid2, (2, 3))
        lap = divergence(gradient(f))
        assert np.max(np.abs(lap.physical + 13.0 * f.physical)) <= 1e-12

    def test_lp_norm_constant(self):
        vals = np.full((8, 8), 2.0)
        for p in (1.0, 2.0, 3.0, np.inf):
            assert abs(lp_norm(vals, p, 2) - 2.0) < 1e-14

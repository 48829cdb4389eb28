import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpcns.errors import DomainError, PreconditionError, ShapeError
from lpcns.paraproduct import (KINDS, bony_residual, compose, compose_ratio, estimate_ratio, hypothesis,
                               inverse_density, para, random_ensemble, remainder, telescoping_terms)
from lpcns.spectral import Field, Grid, lp_block

from conftest import mode, random_field


def direct_product(f, g):
    """Unfiltered grid product: exact for fields band-limited below a third of the grid."""
    return Field(f.grid, physical=f.physical * g.physical)


class TestBony:
    def test_constant_factor(self, grid2):
        g = random_field(grid2, seed=1, kmax=8) + Field(grid2, physical=np.full(grid2.shape, 0.3))
        c = Field(grid2, physical=np.full(grid2.shape, 2.5))
        out = para(c, g)
        assert np.max(np.abs(out.physical - 2.5 * (g.physical - 0.3))) <= 1e-12

    def test_zero(self, grid2):
        f = random_field(grid2, seed=2)
        assert np.max(np.abs(para(f, Field.zeros(grid2)).spectral)) == 0.0

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_decomposition_against_grid_product(self, seed):
        g = Grid(2, 64)
        f = random_field(g, seed=seed, kmax=10)
        h = random_field(g, seed=seed + 1, kmax=10)
        ref = direct_product(f, h).spectral
        rhs = para(f, h).spectral + para(h, f).spectral + remainder(f, h).spectral
        err = np.sqrt(np.sum(np.abs(ref - rhs) ** 2)) / np.sqrt(np.sum(np.abs(ref) ** 2))
        assert err <= 1e-10

    def test_residual_helper(self, grid2):
        f = random_field(grid2, seed=3) + Field(grid2, physical=np.ones(grid2.shape))
        assert bony_residual(f, random_field(grid2, seed=4)) <= 1e-12

    def test_separated_supports(self):
        g = Grid(2, 128)
        f = lp_block(random_field(g, seed=5), 1)
        h = lp_block(random_field(g, seed=6), 5)
        assert np.max(np.abs(remainder(f, h).spectral)) <= 1e-13

    def test_single_mode_square(self, grid2):
        f = mode(grid2, (4, 0))
        ref = direct_product(f, f).spectral
        rhs = 2 * para(f, f).spectral + remainder(f, f).spectral
        assert np.max(np.abs(ref - rhs)) <= 1e-12

    def test_bilinear(self, grid2):
        f, h = random_field(grid2, seed=7), random_field(grid2, seed=8)
        a = remainder(f * 3.0, h).spectral
        assert np.max(np.abs(a - 3.0 * remainder(f, h).spectral)) <= 1e-12

    def test_locality(self):
        g = Grid(2, 128)
        f, h = random_field(g, seed=9), random_field(g, seed=10)
        j = 4
        near = sum((lp_block(h, k) for k in range(j - 4, j + 5) if g.j_min <= k <= g.j_max), Field.zeros(g))
        a = lp_block(para(f, h), j).spectral
        b = lp_block(para(f, near), j).spectral
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_grid_mismatch(self):
        with pytest.raises(ShapeError):
            para(random_field(Grid(2, 16)), random_field(Grid(2, 32)))


class TestEstimates:
    def test_zero_input(self, grid2):
        assert estimate_ratio("bfg", Field.zeros(grid2), random_field(grid2), 2.0) == 0.0

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            hypothesis("nope", 2, 2.0, {}, 0.5)

    def test_violated_hypothesis(self, grid2):
        f, h = random_field(grid2, seed=1), random_field(grid2, seed=2)
        with pytest.raises(PreconditionError):
            estimate_ratio("Rfg3", f, h, 2.0, params={"t1": -1.0, "t2": -0.5})

    def test_all_kinds_known(self):
        assert len(KINDS) == 9

    @pytest.mark.parametrize("kind,p,params", [
        ("bfg", 2.0, {}),
        ("Cfg", 3.0, {}),
        ("Tfg1", 2.0, {"s": 0.5, "t": -0.5}),
        ("Rfg3", 2.0, {"t1": 0.5, "t2": 0.5}),
        ("product4", 2.0, {"s1": 1.0, "s2": 0.5}),
    ])
    def test_ratio_stable_on_matched_fields(self, kind, p, params):
        sups = []
        for n in (32, 64):
            g = Grid(2, n)
            fs, gs = random_ensemble(g, 10, 1.0, seed=1, kmax=8), random_ensemble(g, 10, 1.0, seed=2, kmax=8)
            sups.append(max(estimate_ratio(kind, f, h, p, params=params) for f, h in zip(fs, gs)))
        assert abs(sups[1] / sups[0] - 1.0) <= 0.2

    @pytest.mark.parametrize("kind,p,params", [
        ("bfg", 2.0, {}),
        ("Cfg", 3.0, {}),
        ("Rfg3", 2.0, {"t1": 0.5, "t2": 0.5}),
    ])
    def test_ratio_does_not_grow_with_resolved_spectrum(self, kind, p, params):
        sups = []
        for n in (32, 64):
            g = Grid(2, n)
            fs, gs = random_ensemble(g, 10, 1.0, seed=1), random_ensemble(g, 10, 1.0, seed=2)
            sups.append(max(estimate_ratio(kind, f, h, p, params=params) for f, h in zip(fs, gs)))
        assert sups[1] <= 1.2 * sups[0]

    def test_violation_blows_up(self):
        # cos(kx) cos((k+1)x) pushes mass to frequency 1; with t1 + t2 = -1.5 < -d/p
        # the ratio grows like 2^{j/2} as the resolved k doubles
        ratios = []
        for n in (32, 64, 128):
            g = Grid(2, n)
            k = n // 4
            ratios.append(estimate_ratio("Rfg3", mode(g, (k, 0)), mode(g, (k + 1, 0)), 2.0,
                                         params={"t1": -0.75, "t2": -0.75}, strict=False))
        growth = [ratios[i + 1] / ratios[i] for i in range(2)]
        assert np.allclose(growth, 2**0.5, rtol=0.01)


class TestCompose:
    def test_identity(self, grid2):
        f = random_field(grid2, seed=11)
        out = compose(lambda x: x, f)
        assert np.max(np.abs(out.spectral - f.spectral)) <= 1e-12

    def test_inverse_density_zero(self, grid2):
        assert np.max(np.abs(inverse_density(Field.zeros(grid2)).spectral)) == 0.0

    def test_vacuum(self, grid2):
        a = Field(grid2, physical=np.full(grid2.shape, -0.8))
        with pytest.raises(DomainError):
            inverse_density(a)

    def test_taylor_remainder(self, grid2):
        a = random_field(grid2, seed=12, kmax=4)
        a = a * (0.1 / np.max(np.abs(a.physical)))
        x = a.physical
        amax = np.max(np.abs(x))
        err = np.max(np.abs(x / (1 + x) - (x - x * x)))
        assert err <= amax**3 / (1 - amax)

    def test_telescoping(self, grid2):
        a = random_field(grid2, seed=13) * 0.05
        F = lambda x: x / (1 + x)
        dF = lambda x: 1.0 / (1 + x) ** 2
        for diff, lin in telescoping_terms(F, dF, a, 1, count=3):
            assert np.max(np.abs(diff - lin)) <= 1e-12

    def test_ratio_needs_positive_s(self, grid2):
        with pytest.raises(PreconditionError):
            compose_ratio(lambda x: x, random_field(grid2), 0.0, 2.0)

    def test_ratio_stable(self):
        F = lambda x: x / (1 + x)
        sups = []
        for n in (32, 64):
            g = Grid(2, n)
            fs = random_ensemble(g, 10, 1.5, seed=3, scale=0.1)
            sups.append(max(compose_ratio(F, f, 1.0, 2.0) for f in fs))
        assert abs(sups[1] / sups[0] - 1.0) <= 0.2

"""Acceptance criteria 1-10.

Each test runs one experiment at its default configuration, asserts that
every check in the report holds, re-checks the headline numbers against
the literal thresholds and records one PASS/FAIL line.  The lines are
printed as they happen and repeated in the terminal summary.
"""

import math

import pytest

from lpcns.experiments import default_spec, run

pytestmark = pytest.mark.slow

RESULTS: list[str] = []
TIME_LIMIT = 300.0


def _values(rep, prefix):
    found = [c for c in rep.criteria if c.label.startswith(prefix)]
    assert found, f"{rep.name}: no check labelled {prefix!r}"
    return found


def _accept(number, title, name, literal, **overrides):
    """Run ``name`` and assert every report check plus the literal bounds.

    ``literal`` maps a label prefix to ``("<=" | ">=", bound)``.
    """
    spec = default_spec(name, **overrides)
    assert not spec.tolerances, "acceptance runs use the default tolerances"
    rep = run(spec)
    problems = [line for line in rep.summary_lines() if not line.startswith("PASS")]
    for prefix, (rel, bound) in literal.items():
        for c in _values(rep, prefix):
            ok = c.value <= bound if rel == "<=" else c.value >= bound
            if not ok or math.isnan(c.value):
                problems.append(f"{c.label} = {c.value:.6g} not {rel} {bound:g}")
    if rep.runtime_s > TIME_LIMIT:
        problems.append(f"runtime {rep.runtime_s:.0f} s over {TIME_LIMIT:.0f} s")
    status = "FAIL" if problems else "PASS"
    line = f"{status} criterion {number:2d} {title} ({len(rep.criteria)} checks, {rep.runtime_s:.1f} s)"
    RESULTS.append(line)
    print(line)
    assert not problems, "\n".join(problems)
    return rep


class TestAcceptance:
    def test_01_littlewood_paley(self):
        rep = _accept(1, "Littlewood-Paley exactness", "lp_exactness", {
            "partition of unity": ("<=", 1e-12),
            "block annihilation": ("<=", 1e-12),
            "Bony reconstruction": ("<=", 1e-10),
        })
        assert "100 pairs" in _values(rep, "Bony")[0].label

    def test_02_heat_lame(self):
        rep = _accept(2, "heat/Lame exactness", "heat_lame", {
            "heat f=0": ("<=", 1e-12),
            "Lame f=0": ("<=", 1e-12),
            "max-regularity ratio drift": ("<=", 0.2),
        })
        labels = [c.label for c in _values(rep, "max-regularity")]
        assert [lab.split("rho1=")[1] for lab in labels] == ["1", "2", "inf"]

    def test_03_transport(self):
        rep = _accept(3, "transport fidelity", "transport", {
            "rotation L2 drift": ("<=", 1e-6),
            "transport estimate": ("<=", 0.2),
            "commutator with constant v": ("<=", 1e-11),
        })
        assert rep.config["params"].get("rotation_N", 128) == 128
        assert rep.config["params"].get("rotation_dt", 1e-3) == 1e-3

    def test_04_envelope(self):
        _accept(4, "envelope construction", "envelope", {
            "N_k = k + 2 mismatches": ("<=", 0.0),
            "omega_i = 2^{(i-2)/2}": ("<=", 0.0),
            "validate(omega)": (">=", 1.0),
            "sup weighted data norm over 10 members": ("<=", math.inf),
        })

    def test_05_tail_estimate(self):
        rep = _accept(5, "tail estimate", "tail_estimate", {
            "max_n ||P_{>N}": ("<=", 1.0),
            "chain members violating": ("<=", 0.0),
        })
        m = rep.measurements
        assert m["eps"] == pytest.approx(0.1 * m["C4"], rel=1e-15)

    def test_06_lagrangian(self):
        rep = _accept(6, "Lagrangian step", "lagrangian_difference", {
            "Lipschitz ratio spread": ("<=", 0.3),
            "runs violating the interpolation chain": ("<=", 0.0),
        })
        assert rep.config["eps"] == [1e-2, 1e-3, 1e-4]

    def test_07_continuity_sweep(self):
        rep = _accept(7, "continuity sweep", "continuity_sweep", {
            "p=1: max D_m+1": ("<=", 1.0),
            "p=2: max D_m+1": ("<=", 1.0),
            "p=3: max D_m+1": ("<=", 1.0),
            "p=1: D_last / D_1": ("<=", 1e-3),
            "p=2: D_last / D_1": ("<=", 1e-3),
            "p=3: D_last / D_1": ("<=", 1e-3),
        })
        assert rep.config["d"] == 2

    def test_08_bona_smith(self):
        rep = _accept(8, "Bona-Smith", "bona_smith", {
            "persistence": ("<=", 1.0 + 1e-12),
            "lodiffb and lodiffc ratios finite": (">=", 1.0),
            "lodiffb ratio drift": ("<=", 0.2),
            "lodiffc ratio drift": ("<=", 0.2),
            "budget term": ("<=", math.inf),
        })
        c = rep.config
        assert (c["d"], c["p"], c["N"]) == (3, 2.0, 32)
        eps = rep.measurements["budget_eps"]
        caps = [c.bound for c in _values(rep, "budget term")]
        assert caps == pytest.approx([eps / 8.0, eps / 2.0, 3.0 * eps / 8.0], rel=1e-15)

    def test_09_counterexample(self):
        _accept(9, "counterexample", "counterexample", {
            "eps=0.01: sup_t": (">=", 2.0 - 1e-2 - 1e-13),
            "eps=0.001: sup_t": (">=", 2.0 - 1e-3 - 1e-13),
            "eps=0.0001: sup_t": (">=", 2.0 - 1e-4 - 1e-13),
            "modulus conservation": ("<=", 1e-12),
        })

    def test_10_solver_hygiene(self):
        _accept(10, "solver hygiene", "solver_hygiene", {
            "mass drift ratio": ("<=", 0.625),
            "momentum drift ratio": ("<=", 0.625),
            "self-convergence": ("<=", 1.0),
        })

import csv
import json

import numpy as np
import pytest

from lpcns.errors import DataError, DomainError, PreconditionError
from lpcns.experiments import (
    EXPERIMENTS,
    Criterion,
    ExperimentReport,
    ExperimentSpec,
    default_data,
    default_spec,
    run,
)
from lpcns.spectral import Grid, magnitude


class TestSpec:
    def test_unknown_keys_rejected(self):
        with pytest.raises(DataError):
            ExperimentSpec.from_dict({"name": "envelope", "bogus": 1})

    def test_round_trip(self):
        spec = default_spec("bona_smith")
        back = ExperimentSpec.from_dict(spec.to_dict())
        assert back == spec

    def test_overrides_merge_params(self):
        spec = default_spec("continuity_sweep", N=32, params={"extra": 1})
        assert spec.N == 32
        assert spec.params["extra"] == 1 and "ps" in spec.params

    @pytest.mark.parametrize("bad", [{"d": 4}, {"p": 0.5}, {"dt": 0.0}, {"T": -1.0}])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            ExperimentSpec(name="x", **bad)

    def test_unknown_experiment(self):
        with pytest.raises(DataError, match="valid"):
            default_spec("nope")
        with pytest.raises(DataError):
            run(ExperimentSpec(name="nope"))

    def test_bona_smith_needs_p_below_d(self):
        with pytest.raises(PreconditionError):
            run("bona_smith", p=3.0)

    def test_bona_smith_needs_three_dims(self):
        with pytest.raises(PreconditionError):
            run("bona_smith", d=2, p=1.5)


class TestReport:
    def test_criterion_relations(self):
        assert Criterion("x", "-", 1.0, 1.0).passed
        assert not Criterion("x", "-", 1.1, 1.0).passed
        assert Criterion("x", "-", 2.0, 1.0, ">=").passed
        assert not Criterion("x", "-", float("nan"), 1.0).passed

    def test_empty_report_fails(self):
        assert not ExperimentReport("x", {}).passed

    def test_flags_fail(self):
        rep = ExperimentReport("x", {})
        rep.check("ok", "-", 0.0, 1.0)
        assert rep.passed
        rep.flags.append("something odd")
        assert not rep.passed

    def test_write_json_and_csv(self, tmp_path):
        rep = ExperimentReport("demo", {"eps": (0.1,), "inf": float("inf")})
        rep.check("value", "-", 0.25, 1.0)
        rep.measurements["arr"] = np.arange(3.0)
        rep.table("rows", ["a", "b"], [[1, 0.1], [2, float("nan")]])
        paths = rep.write(tmp_path)
        assert [p.name for p in paths] == ["demo.json", "demo_rows.csv"]
        data = json.loads(paths[0].read_text())
        assert data["passed"] is True
        assert data["config"]["inf"] == "inf"
        assert data["measurements"]["arr"] == [0.0, 1.0, 2.0]
        rows = list(csv.reader(paths[1].open()))
        assert rows[0] == ["a", "b"]
        assert float(rows[1][1]) == 0.1

    def test_summary_lines(self):
        rep = ExperimentReport("demo", {})
        rep.check("small", "-", 2.0, 1.0)
        assert rep.summary_lines() == ["FAIL demo: small = 2 <= 1"]


class TestData:
    @pytest.mark.parametrize("dim,n", [(2, 32), (2, 64), (3, 16)])
    def test_amplitudes_grid_independent(self, dim, n):
        # band-limited data are the same function on every grid that resolves it
        s = default_data(Grid(dim, n), seed=4)
        ref = default_data(Grid(dim, 256 if dim == 2 else 64), seed=4)
        assert abs(np.max(np.abs(ref.a.physical)) - 0.02) <= 1e-12
        assert abs(np.max(magnitude(ref.u.physical)) - 0.1) <= 1e-12
        assert np.max(np.abs(s.a.physical)) <= 0.02 + 1e-12

    def test_seeds_differ(self, grid2):
        a = default_data(grid2, 0).a.spectral
        b = default_data(grid2, 1).a.spectral
        assert not np.allclose(a, b)


class TestFastExperiments:
    @pytest.mark.parametrize("name", ["lp_exactness", "envelope", "counterexample"])
    def test_passes(self, name, tmp_path):
        rep = run(name)
        assert rep.passed, rep.summary_lines()
        rep.write(tmp_path)
        assert (tmp_path / f"{name}.json").exists()

    def test_deterministic_apart_from_runtime(self):
        a = run("envelope").to_dict()
        b = run("envelope").to_dict()
        a.pop("runtime_s")
        b.pop("runtime_s")
        assert a == b

    def test_registry_names(self):
        assert set(EXPERIMENTS) == {
            "lp_exactness", "heat_lame", "transport", "envelope", "tail_estimate",
            "lagrangian_difference", "lowfreq_difference", "continuity_sweep",
            "bona_smith", "counterexample", "solver_hygiene",
        }


@pytest.mark.slow
class TestLowFrequency:
    def test_passes_with_single_constant(self):
        rep = run("lowfreq_difference")
        assert rep.passed, rep.summary_lines()
        same = [c for c in rep.criteria if c.label.startswith("identical solutions")]
        assert same and same[0].value == 0.0

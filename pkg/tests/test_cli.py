import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lpcns.cli import main
from lpcns.experiments import EXPERIMENTS
from lpcns.solvers import mass
from lpcns.trajectory import load_checkpoint


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    code = main(["solve", "--d", "2", "--N", "32", "--dt", "1e-2", "--T", "0.1", "--out", str(out)])
    return code, out


class TestBasics:
    def test_list(self, capsys):
        assert main(["list"]) == 0
        names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
        assert names == list(EXPERIMENTS)

    def test_unknown_experiment_lists_names(self, capsys):
        assert main(["experiment", "nope"]) == 2
        err = capsys.readouterr().err
        assert all(n in err for n in EXPERIMENTS)

    def test_missing_subcommand(self):
        assert main([]) == 2

    def test_bad_time(self):
        assert main(["solve", "--T", "soon"]) == 2

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0

    def test_module_entry(self):
        res = subprocess.run([sys.executable, "-m", "lpcns", "list"], capture_output=True, text=True)
        assert res.returncode == 0
        assert "bona_smith" in res.stdout


class TestExperiment:
    def test_pass_writes_report(self, tmp_path, capsys):
        assert main(["experiment", "counterexample", "--out", str(tmp_path)]) == 0
        assert "PASS counterexample" in capsys.readouterr().out
        data = json.loads((tmp_path / "counterexample.json").read_text())
        assert data["passed"] is True
        assert (tmp_path / "counterexample_distances.csv").exists()

    def test_criterion_failure_exit_one(self, tmp_path):
        spec = tmp_path / "spec.json"
        # a negative bound on a nonnegative error cannot hold
        spec.write_text(json.dumps({"tolerances": {"partition": -1.0}}))
        code = main(["experiment", "lp_exactness", "--spec", str(spec), "--out", str(tmp_path)])
        assert code == 1
        data = json.loads((tmp_path / "lp_exactness.json").read_text())
        assert data["passed"] is False

    def test_bad_spec_key(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"bogus": 1}))
        assert main(["experiment", "envelope", "--spec", str(spec), "--out", str(tmp_path)]) == 2

    def test_unreadable_spec(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text("{not json")
        assert main(["experiment", "envelope", "--spec", str(spec)]) == 2

    def test_precondition_is_config_error(self, tmp_path):
        assert main(["experiment", "bona_smith", "--p", "3", "--out", str(tmp_path)]) == 2

    def test_deterministic(self, tmp_path):
        for sub in ("a", "b"):
            assert main(["experiment", "envelope", "--out", str(tmp_path / sub)]) == 0
        a = json.loads((tmp_path / "a" / "envelope.json").read_text())
        b = json.loads((tmp_path / "b" / "envelope.json").read_text())
        a.pop("runtime_s")
        b.pop("runtime_s")
        assert a == b
        assert (tmp_path / "a" / "envelope_family.csv").read_bytes() == \
            (tmp_path / "b" / "envelope_family.csv").read_bytes()


class TestSolveNorms:
    def test_solve_outputs(self, solved):
        code, out = solved
        assert code == 0
        for name in ("solve.bin", "solve.json", "solve_norms.csv", "solve_report.json"):
            assert (out / name).exists()
        rep = json.loads((out / "solve_report.json").read_text())
        traj = load_checkpoint(out / "solve.bin")
        assert traj.times[-1] == pytest.approx(0.1)
        # drift is a splitting error; the report must agree with the stored fields
        drift = abs(mass(traj.final("a")) - mass(traj.field("a", 0)))
        assert rep["mass_drift"] == pytest.approx(drift, rel=1e-12, abs=1e-15)
        assert rep["mass_drift"] <= 1e-8

    def test_norms_match_cache(self, solved, tmp_path, capsys):
        _, out = solved
        csv_path = tmp_path / "n.csv"
        assert main(["norms", str(out / "solve.bin"), "--s", "1", "--out", str(csv_path)]) == 0
        assert "PASS" in capsys.readouterr().err
        rows = list(csv.reader(csv_path.open()))
        assert rows[0] == ["t", "a_B1_2_1", "u_B1_2_1"]
        traj = load_checkpoint(out / "solve.bin")
        assert len(rows) == len(traj) + 1

    def test_norms_agree_with_solve_csv(self, solved, tmp_path):
        _, out = solved
        csv_path = tmp_path / "n.csv"
        main(["norms", str(out / "solve.bin"), "--s", "1", "--field", "a", "--out", str(csv_path)])
        fresh = np.array([float(r[1]) for r in list(csv.reader(csv_path.open()))[1:]])
        ref = np.array([float(r[1]) for r in list(csv.reader((out / "solve_norms.csv").open()))[1:]])
        assert np.max(np.abs(fresh - ref)) <= 1e-12 * max(1.0, np.max(ref))

    def test_tampered_cache_fails(self, solved, tmp_path):
        _, out = solved
        side = json.loads((out / "solve.json").read_text())
        side["block_norms"]["a"]["2.0"][1][0] += 1e-6
        stem = tmp_path / "bad"
        (tmp_path / "bad.bin").write_bytes((out / "solve.bin").read_bytes())
        (tmp_path / "bad.json").write_text(json.dumps(side))
        assert main(["norms", str(stem) + ".bin", "--out", str(tmp_path / "n.csv")]) == 1

    def test_uncached_exponent(self, solved, tmp_path, capsys):
        _, out = solved
        assert main(["norms", str(out / "solve.bin"), "--p", "3", "--out", str(tmp_path / "n.csv")]) == 0
        assert "nothing to compare" in capsys.readouterr().err

    def test_unknown_field(self, solved):
        _, out = solved
        assert main(["norms", str(out / "solve.bin"), "--field", "rho"]) == 2

    def test_missing_checkpoint(self, tmp_path):
        assert main(["norms", str(tmp_path / "absent.bin")]) == 2

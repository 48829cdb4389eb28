"""
Command-line entry point.

``lpcns list`` names the experiments, ``lpcns experiment <name>`` runs one
and writes a JSON report plus CSV tables, ``lpcns solve`` integrates the
compressible system from seeded data into a checkpoint, and ``lpcns norms``
recomputes Besov norms from a checkpoint and compares them with the cached
block norms.  Exit codes: 0 success, 1 a criterion failed, 2 configuration
or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .besov import aggregate
from .errors import LPCNSError
from .experiments import EXPERIMENTS, ExperimentSpec, default_data, default_spec, run
from .solvers import admissible_time, cns_solve, mass, momentum
from .trajectory import Trajectory, load_checkpoint

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
NORM_TOL = 1e-12


class ConfigError(Exception):
    """Bad command-line or spec-file configuration."""


def _time_arg(text: str):
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"T must be a number or 'auto', got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError("T must be positive")
    return value


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--spec", type=Path, help="JSON spec file; flags override its entries")
    sp.add_argument("--d", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--T", type=_time_arg, default=argparse.SUPPRESS,
                    help="final time, or 'auto' for the admissible time")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--eps", type=float, nargs="+", help="perturbation sizes")
    sp.add_argument("--out", type=Path, default=Path("lpcns_out"), help="output directory")
    sp.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpcns", description="Littlewood-Paley / compressible NS experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list the experiments")
    ex = sub.add_parser("experiment", help="run a named experiment")
    ex.add_argument("name")
    _common(ex)
    so = sub.add_parser("solve", help="solve from seeded data and write a checkpoint")
    _common(so)
    so.add_argument("--save-every", type=int, default=1)
    so.add_argument("--stem", default="solve", help="checkpoint file stem")
    no = sub.add_parser("norms", help="Besov norms per timestamp from a checkpoint")
    no.add_argument("checkpoint", type=Path)
    no.add_argument("--s", type=float, default=0.0)
    no.add_argument("--p", type=float, default=2.0)
    no.add_argument("--r", type=float, default=1.0)
    no.add_argument("--field", action="append", help="field name (default: all)")
    no.add_argument("--out", type=Path, help="CSV output file (default: stdout)")
    return ap


def _overrides(args) -> dict:
    out = {}
    if args.spec is not None:
        try:
            data = json.loads(args.spec.read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read spec file {args.spec}: {exc}")
        if not isinstance(data, dict):
            raise ConfigError(f"spec file {args.spec} must hold a JSON object")
        data.pop("name", None)
        out.update(data)
    for key in ("d", "p", "N", "dt", "seed"):
        val = getattr(args, key)
        if val is not None:
            out[key] = val
    if "T" in vars(args):
        out["T"] = args.T
    if args.eps is not None:
        out["eps"] = tuple(args.eps)
    if "eps" in out:
        out["eps"] = tuple(out["eps"])
    return out


def _make_spec(name: str, args) -> ExperimentSpec:
    ov = _overrides(args)
    try:
        if name == "solve":
            return ExperimentSpec.from_dict({"name": name, **ov})
        return default_spec(name, **ov)
    except TypeError as exc:
        raise ConfigError(f"bad spec entry: {exc}")


def _cmd_list(args) -> int:
    for name in EXPERIMENTS:
        doc = (EXPERIMENTS[name].__doc__ or "").strip().splitlines()
        print(f"{name:24s} {doc[0] if doc else ''}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    if args.name not in EXPERIMENTS:
        print(f"unknown experiment {args.name!r}; valid names: {', '.join(EXPERIMENTS)}", file=sys.stderr)
        return EXIT_CONFIG
    spec = _make_spec(args.name, args)
    rep = run(spec)
    paths = rep.write(args.out)
    for line in rep.summary_lines():
        print(line)
    if args.verbose:
        for p in paths:
            print(f"wrote {p}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _write_csv(path: Path | None, header: list[str], rows: list[list]) -> None:
    fh = open(path, "w", newline="") if path is not None else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    finally:
        if path is not None:
            fh.close()


def _cmd_solve(args) -> int:
    spec = _make_spec("solve", args)
    d, p = spec.d, spec.p
    g = spec.grid()
    data = default_data(g, spec.seed)
    T = spec.T if spec.T is not None else admissible_time(data.u, spec.mu, spec.smallness or 0.05, p,
                                                           T_max=spec.T_max)
    cfg = spec.solver_config(T, save_every=args.save_every, norm_ps=(p,))
    t0 = time.perf_counter()
    traj = cns_solve(data, cfg)
    traj.meta.update(spec.to_dict(), T=T)
    args.out.mkdir(parents=True, exist_ok=True)
    bin_path, json_path = traj.save(args.out / args.stem)
    js = g.j_range
    rows = []
    ma, mu_ = traj.norm_matrix("a", p), traj.norm_matrix("u", p)
    for i, t in enumerate(traj.times):
        rows.append([t, float(aggregate(js, ma[i], d / p, 1.0)), float(aggregate(js, mu_[i], d / p - 1.0, 1.0)),
                     float(aggregate(js, mu_[i], d / p + 1.0, 1.0))])
    csv_path = args.out / f"{args.stem}_norms.csv"
    _write_csv(csv_path, ["t", f"a_B{d / p:g}", f"u_B{d / p - 1.0:g}", f"u_B{d / p + 1.0:g}"], rows)
    a0, aT = traj.field("a", 0), traj.final("a")
    m0 = momentum(a0, traj.field("u", 0))
    summary = {"name": "solve", "config": spec.to_dict() | {"T": T},
               "records": len(traj), "mass_drift": abs(mass(aT) - mass(a0)),
               "momentum_drift": float(np.max(np.abs(momentum(aT, traj.final("u")) - m0))),
               "checkpoint": str(bin_path), "sidecar": str(json_path), "norms_csv": str(csv_path),
               "runtime_s": time.perf_counter() - t0}
    (args.out / f"{args.stem}_report.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    print(f"T = {T:.6g}, {len(traj)} records -> {bin_path}")
    return EXIT_OK


def _pkey(p: float) -> str:
    return "inf" if math.isinf(p) else repr(float(p))


def _cmd_norms(args) -> int:
    traj: Trajectory = load_checkpoint(args.checkpoint)
    names = args.field or list(traj.names)
    unknown = [n for n in names if n not in traj.names]
    if unknown:
        raise ConfigError(f"no field(s) {unknown} in checkpoint; have {list(traj.names)}")
    js = traj.grid.j_range
    cached = getattr(traj, "cached_from_file", {})
    header, cols, worst, compared = ["t"], [traj.times], 0.0, False
    for name in names:
        fresh = aggregate(js, traj.norm_matrix(name, args.p), args.s, args.r)
        header.append(f"{name}_B{args.s:g}_{args.p:g}_{args.r:g}")
        cols.append(fresh)
        mat = cached.get(name, {}).get(_pkey(args.p))
        if mat is not None:
            ref = aggregate(js, np.asarray(mat, dtype=float), args.s, args.r)
            scale = max(1.0, float(np.max(np.abs(ref))))
            worst = max(worst, float(np.max(np.abs(fresh - ref))) / scale)
            compared = True
    _write_csv(args.out, header, [list(r) for r in zip(*cols)])
    if not compared:
        print(f"no cached block norms for p={args.p:g}; nothing to compare", file=sys.stderr)
        return EXIT_OK
    status = "PASS" if worst <= NORM_TOL else "FAIL"
    print(f"{status} cached-norm agreement: max deviation {worst:.3g} <= {NORM_TOL:g}", file=sys.stderr)
    return EXIT_OK if worst <= NORM_TOL else EXIT_FAIL


_COMMANDS = {"list": _cmd_list, "experiment": _cmd_experiment, "solve": _cmd_solve, "norms": _cmd_norms}


def main(argv: list[str] | None = None) -> int:
    """Run the command line; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, LPCNSError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

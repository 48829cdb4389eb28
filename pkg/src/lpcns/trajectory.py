"""
Time-stamped sequences of fields with cached block norms and checkpoints.

A checkpoint is a pair of files: ``<stem>.bin`` holds fixed-size records
``(timestamp, spectral coefficients of every field)`` after an 8-byte magic
header, and ``<stem>.json`` holds the grid, field layout, configuration and
the cached block norms.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .besov import block_norm_values
from .errors import DataError, ShapeError
from .spectral import Field, Grid

__all__ = ["Trajectory", "save_checkpoint", "load_checkpoint"]

MAGIC = b"LPCNSCK1"


def _pkey(p: float) -> str:
    return "inf" if math.isinf(p) else repr(float(p))


class Trajectory:
    """Append-only record of named fields at increasing times.

    Parameters
    ----------
    grid : Grid
    meta : dict, optional
        Free-form configuration echoed into checkpoints.
    """

    def __init__(self, grid: Grid, meta: dict | None = None):
        self.grid = grid
        self.meta = dict(meta or {})
        self._times: list[float] = []
        self._data: dict[str, list[np.ndarray]] = {}
        self._norms: dict[tuple[str, float], list[np.ndarray]] = {}
        self.norm_ps: tuple[float, ...] = ()

    def __len__(self) -> int:
        return len(self._times)

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self._times, dtype=float)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._data)

    def cache_norms(self, ps: Iterable[float]) -> "Trajectory":
        """Compute block norms eagerly for these exponents on every append."""
        self.norm_ps = tuple(float(p) for p in ps)
        for name in self._data:
            for p in self.norm_ps:
                self.norm_matrix(name, p)
        return self

    def append(self, t: float, **fields: Field) -> None:
        t = float(t)
        if self._times and not t > self._times[-1]:
            raise DataError(f"timestamps must increase: {t} after {self._times[-1]}")
        if self._data and set(fields) != set(self._data):
            raise DataError(f"expected fields {sorted(self._data)}, got {sorted(fields)}")
        for name, f in fields.items():
            if f.grid != self.grid:
                raise ShapeError(f"field {name!r} lives on another grid")
        first = not self._data
        for name, f in fields.items():
            if first:
                self._data[name] = []
            self._data[name].append(np.array(f.spectral))
        self._times.append(t)
        if self.norm_ps:
            for name, f in fields.items():
                vals = block_norm_values(f, self.norm_ps)
                for p in self.norm_ps:
                    lst = self._norms.setdefault((name, p), [])
                    if len(lst) == len(self._times) - 1:
                        lst.append(vals[p])

    def field(self, name: str, i: int) -> Field:
        return Field(self.grid, spectral=self._data[name][i])

    def fields(self, name: str) -> list[Field]:
        return [Field(self.grid, spectral=c) for c in self._data[name]]

    def spectral(self, name: str) -> np.ndarray:
        """All coefficients of one field, shape ``(n_times, c, n, ..., n)``."""
        if name not in self._data:
            raise DataError(f"no field {name!r}; have {self.names}")
        return np.stack(self._data[name])

    def final(self, name: str) -> Field:
        return self.field(name, -1)

    def norm_matrix(self, name: str, p: float) -> np.ndarray:
        """Cached block norms, shape ``(n_times, J)``."""
        if len(self) == 0:
            raise DataError("empty trajectory")
        p = float(p)
        lst = self._norms.setdefault((name, p), [])
        data = self._data[name]
        while len(lst) < len(data):
            f = Field(self.grid, spectral=data[len(lst)])
            lst.append(block_norm_values(f, [p])[p])
        return np.stack(lst)

    def cached_ps(self, name: str) -> list[float]:
        return sorted(p for (n, p) in self._norms if n == name)

    def at_time(self, name: str, t: float, order: int = 3) -> np.ndarray:
        """Spectral coefficients at time ``t`` by Lagrange interpolation.

        Uses the ``order + 1`` stored samples nearest to ``t``.
        """
        times = self.times
        if len(times) == 0:
            raise DataError("empty trajectory")
        if len(times) == 1:
            return self._data[name][0]
        m = min(order + 1, len(times))
        i = int(np.searchsorted(times, t))
        lo = max(0, min(i - m // 2, len(times) - m))
        idx = range(lo, lo + m)
        out = np.zeros_like(self._data[name][0])
        for a in idx:
            w = 1.0
            for b in idx:
                if b != a:
                    w *= (t - times[b]) / (times[a] - times[b])
            out = out + w * self._data[name][a]
        return out

    def subsample(self, every: int) -> "Trajectory":
        out = Trajectory(self.grid, self.meta)
        keep = list(range(0, len(self), every))
        if keep[-1] != len(self) - 1:
            keep.append(len(self) - 1)
        for i in keep:
            out.append(self._times[i], **{n: self.field(n, i) for n in self.names})
        return out

    def save(self, stem) -> tuple[Path, Path]:
        return save_checkpoint(self, stem)

    @classmethod
    def load(cls, path) -> "Trajectory":
        return load_checkpoint(path)


def _record_dtype(grid: Grid, layout: list[tuple[str, int]]) -> np.dtype:
    fields = [("t", "<f8")]
    for name, comps in layout:
        fields.append((name, "<c16", (comps,) + grid.shape))
    return np.dtype(fields)


def _stem(path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".bin", ".json") else path


def save_checkpoint(traj: Trajectory, stem) -> tuple[Path, Path]:
    """Write ``<stem>.bin`` and ``<stem>.json``; returns both paths."""
    if len(traj) == 0:
        raise DataError("cannot checkpoint an empty trajectory")
    stem = _stem(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    layout = [(n, traj._data[n][0].shape[0]) for n in traj.names]
    dt = _record_dtype(traj.grid, layout)
    rec = np.zeros(len(traj), dtype=dt)
    rec["t"] = traj.times
    for n, _ in layout:
        rec[n] = traj.spectral(n)
    bin_path, json_path = stem.with_suffix(".bin"), stem.with_suffix(".json")
    with open(bin_path, "wb") as fh:
        fh.write(MAGIC)
        rec.tofile(fh)
    norms = {}
    for (n, p) in sorted(traj._norms, key=lambda k: (k[0], k[1])):
        norms.setdefault(n, {})[_pkey(p)] = traj.norm_matrix(n, p).tolist()
    side = {
        "format": "lpcns-checkpoint-1",
        "grid": {"dim": traj.grid.dim, "n": traj.grid.n, "length": traj.grid.length,
                 "dealias_fraction": traj.grid.dealias_fraction},
        "fields": [{"name": n, "components": c} for n, c in layout],
        "records": len(traj),
        "j_range": [int(traj.grid.j_min), int(traj.grid.j_max)],
        "config": traj.meta,
        "block_norms": norms,
    }
    json_path.write_text(json.dumps(side, indent=1, sort_keys=True))
    return bin_path, json_path


def load_checkpoint(path) -> Trajectory:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    stem = _stem(path)
    bin_path, json_path = stem.with_suffix(".bin"), stem.with_suffix(".json")
    try:
        side = json.loads(json_path.read_text())
        g = side["grid"]
        grid = Grid(int(g["dim"]), int(g["n"]), float(g["length"]), float(g["dealias_fraction"]))
        layout = [(f["name"], int(f["components"])) for f in side["fields"]]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise DataError(f"unreadable checkpoint sidecar {json_path}: {exc}") from exc
    dt = _record_dtype(grid, layout)
    try:
        with open(bin_path, "rb") as fh:
            if fh.read(len(MAGIC)) != MAGIC:
                raise DataError(f"{bin_path} is not a checkpoint file")
            rec = np.fromfile(fh, dtype=dt)
    except OSError as exc:
        raise DataError(f"unreadable checkpoint {bin_path}: {exc}") from exc
    if rec.size != side.get("records", rec.size):
        raise DataError("record count differs from the sidecar")
    traj = Trajectory(grid, side.get("config", {}))
    for r in rec:
        traj.append(float(r["t"]), **{n: Field(grid, spectral=r[n]) for n, _ in layout})
    traj.cached_from_file = side.get("block_norms", {})
    return traj

"""w-sweeps over seeded synthetic targets.

Each (w, seed) point runs one flow toward ``gen_synthetic(kind, rows, cols,
noise, seed)`` and yields one summary row. Points are independent, so they may
run on a thread pool; rows always come back in (w, seed) order.
"""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigError
from .flow import FlowConfig, run_nsa_flow
from .spca import sparsity
from .synthetic import KINDS, gen_synthetic

SUMMARY_FIELDS = ("w", "seed", "fidelity_error", "orth_defect", "sparsity", "iterations", "time_s")
INIT_SEED_OFFSET = 100
INITS = ("random", "target")


@dataclass(frozen=True)
class SweepSpec:
    w_grid: tuple[float, ...]
    seeds: tuple[int, ...] = (0,)
    kind: str = "block_nonneg"
    rows: int = 60
    cols: int = 8
    noise: float = 0.3
    init: str = "random"
    base: FlowConfig = field(default_factory=FlowConfig)

    def __post_init__(self):
        object.__setattr__(self, "w_grid", tuple(float(w) for w in self.w_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.w_grid:
            raise ConfigError("w grid is empty")
        if any(b < a for a, b in zip(self.w_grid, self.w_grid[1:])):
            raise ConfigError("w grid must be sorted ascending")
        if any(not 0.0 <= w <= 1.0 for w in self.w_grid):
            raise ConfigError("w grid values must lie in [0, 1]")
        if not self.seeds:
            raise ConfigError("seed list is empty")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        base = d.pop("base", {}) or {}
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
        try:
            return cls(base=FlowConfig(**base), **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SweepSpec":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad sweep file: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("sweep file must hold a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base")
        return d


def initial_point(X0: np.ndarray, init: str, seed: int) -> np.ndarray:
    if init == "target":
        return X0.copy()
    rng = np.random.default_rng(seed + INIT_SEED_OFFSET)
    return np.abs(rng.standard_normal(X0.shape))


def run_point(spec: SweepSpec, w: float, seed: int) -> dict:
    X0 = gen_synthetic(spec.kind, spec.rows, spec.cols, spec.noise, seed)
    Y0 = initial_point(X0, spec.init, seed)
    t0 = time.perf_counter()
    res = run_nsa_flow(Y0, X0, spec.base.replace(w=w, seed=seed))
    elapsed = time.perf_counter() - t0
    return {
        "w": w,
        "seed": seed,
        "fidelity_error": float(np.linalg.norm(res.Y - X0) / max(np.linalg.norm(X0), 1e-300)),
        "orth_defect": res.orth_defect,
        "sparsity": sparsity(res.Y),
        "iterations": res.iterations,
        "time_s": elapsed,
    }


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    points = [(w, s) for w in spec.w_grid for s in spec.seeds]
    if workers <= 1:
        return [run_point(spec, w, s) for w, s in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ws: run_point(spec, *ws), points))


def summary_rows(rows: list[dict]) -> list[tuple]:
    return [tuple(r[k] for k in SUMMARY_FIELDS) for r in rows]

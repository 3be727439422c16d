"""Error-versus-time comparison of update rules from shared initial points.

For every seed one random pair ``(W, H)`` is drawn and rescaled optimally;
every algorithm starts from that same pair and runs under the same
wall-clock budget. One CSV row is written per trace entry.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import GenSpec, gen_lowrank, gen_near_separable
from .initialization import init_random
from .matrix import load_matrix_market
from .solvers import RULES, SolverConfig, run_cd

log = logging.getLogger(__name__)

CSV_HEADER = ["dataset", "algorithm", "seed", "iteration", "elapsed_s", "rel_error", "kkt_total"]


@dataclass
class BenchSpec:
    """One benchmark: a dataset, a list of algorithms and a shared budget.

    ``dataset`` is a Matrix Market path or a :class:`GenSpec`. ``seeds`` is a
    count (seeds ``0..seeds-1``) or an explicit list.
    """

    dataset: str | GenSpec
    algorithms: list[str]
    rank: int
    max_time: float = 10.0
    seeds: int | list[int] = 10
    out: str | None = None
    name: str | None = None
    max_iter: int = 10**9
    track_kkt: bool = True
    solver_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.dataset, dict):
            self.dataset = GenSpec(**self.dataset)
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        self.algorithms = [a.lower() for a in self.algorithms]
        for a in self.algorithms:
            if a not in RULES:
                raise ValueError(f"unknown algorithm {a!r}; choose from {RULES}")
        if isinstance(self.seeds, int):
            if self.seeds < 1:
                raise ValueError("need at least one seed")
            self.seeds = list(range(self.seeds))
        elif not self.seeds:
            raise ValueError("need at least one seed")
        if not self.max_time > 0:
            raise ValueError("max_time must be positive")

    @property
    def dataset_name(self) -> str:
        if self.name:
            return self.name
        if isinstance(self.dataset, GenSpec):
            d = self.dataset
            return f"{d.kind}-{d.p}x{d.n}-r{d.r}-s{d.seed}"
        return Path(self.dataset).stem


def load_bench_spec(path) -> BenchSpec:
    """Read a JSON benchmark description (schema in the README)."""
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("benchmark config must be a JSON object")
    try:
        return BenchSpec(**cfg)
    except TypeError as exc:
        raise ValueError(f"bad benchmark config: {exc}") from exc


def _load_dataset(spec: BenchSpec):
    if isinstance(spec.dataset, GenSpec):
        if spec.dataset.kind == "separable":
            return gen_near_separable(spec.dataset)[0]
        return gen_lowrank(spec.dataset)[0]
    return load_matrix_market(spec.dataset, nonnegative=True)


def run_benchmark(spec: BenchSpec, X=None):
    """Run every (algorithm, seed) cell; return rows and write CSV if ``spec.out``.

    Rows are dicts keyed by :data:`CSV_HEADER`, sorted by dataset, algorithm,
    seed and iteration. ``X`` overrides the dataset descriptor.
    """
    if X is None:
        X = _load_dataset(spec)
    p, n = X.shape
    name = spec.dataset_name
    rows = []
    for seed in spec.seeds:
        init = init_random(p, n, spec.rank, seed=seed, X=X)
        for algo in spec.algorithms:
            cfg = SolverConfig(rule=algo, max_iter=spec.max_iter, max_time=spec.max_time,
                               kkt_tol=0.0, err_tol=0.0, seed=seed,
                               track_kkt=spec.track_kkt, **spec.solver_options)
            _, trace = run_cd(X, spec.rank, cfg, init)
            log.info("%s %s seed=%d: %d iterations, final rel_error %.6g",
                     name, algo, seed, len(trace) - 1, trace.final_error)
            for e in trace.entries:
                rows.append({"dataset": name, "algorithm": algo, "seed": seed,
                             "iteration": e.iteration, "elapsed_s": e.elapsed,
                             "rel_error": e.rel_error, "kkt_total": e.kkt_total})
    rows.sort(key=lambda r: (r["dataset"], r["algorithm"], r["seed"], r["iteration"]))
    if spec.out:
        write_rows(spec.out, rows)
    return rows


def write_rows(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r["dataset"], r["algorithm"], r["seed"], r["iteration"],
                        repr(float(r["elapsed_s"])), repr(float(r["rel_error"])),
                        repr(float(r["kkt_total"]))])


def read_rows(path):
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {rd.fieldnames}")
        return [{"dataset": r["dataset"], "algorithm": r["algorithm"], "seed": int(r["seed"]),
                 "iteration": int(r["iteration"]), "elapsed_s": float(r["elapsed_s"]),
                 "rel_error": float(r["rel_error"]), "kkt_total": float(r["kkt_total"])}
                for r in rd]


def final_errors(rows):
    """``{(dataset, algorithm): {seed: final rel_error}}``."""
    out: dict = {}
    for r in rows:
        out.setdefault((r["dataset"], r["algorithm"]), {})[r["seed"]] = r["rel_error"]
    return out


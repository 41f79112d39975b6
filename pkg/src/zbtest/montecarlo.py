"""Reproducible Monte Carlo: critical values, rejection rates and p-values.

Replications are simulated in fixed blocks of ``BLOCK`` samples. Block b of
size n under the null draws from the substream (master_seed, (0, n, b));
under an alternative the tag 0 is replaced by a CRC32 of its name. Since
every block has its own substream and results are stored by block index,
tables do not depend on the number of worker threads. All statistics of a
plan are evaluated on the same simulated samples.
"""

from __future__ import annotations

import logging
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .alternatives import AlternativeSpec, parse_spec
from .alternatives import sample as draw_alternative
from .errors import InvalidArgumentError, InvalidPlanError, MissingCriticalValueError
from .statistics import residual_matrix
from .streams import RandomStream
from .tables import CriticalValueTable, PowerTable
from .testing import STATISTICS, StatisticId, evaluate, mc_pvalue

__all__ = [
    "BLOCK", "CriticalValueTable", "PowerTable", "RandomStream", "SimulationPlan", "StatisticId",
    "empirical_quantile", "estimate_pvalue", "simulate_critical_values", "simulate_null", "simulate_power",
    "worker_count",
]

log = logging.getLogger(__name__)

BLOCK = 1000
NULL_TAG = 0
STANDARD_TUNING_GRID = (0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0)
STANDARD_SAMPLE_SIZES = (20, 50, 100, 200, 500)
STANDARD_ALPHAS = (0.1, 0.05, 0.01)


def worker_count(requested: int | None = None) -> int:
    """Number of threads to use; ``ZBTEST_THREADS`` caps it."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("ZBTEST_THREADS")
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise InvalidArgumentError(f"ZBTEST_THREADS must be an integer, got {cap!r}") from None
    return max(1, int(n))


@dataclass(frozen=True)
class SimulationPlan:
    replications: int
    sample_sizes: tuple[int, ...]
    tuning_grid: tuple[float, ...] = (1.0,)
    alpha_levels: tuple[float, ...] = (0.05,)
    statistics: tuple = ("g1", "g2")
    master_seed: int = 20240917
    keep_null_values: bool = False

    def __post_init__(self):
        for name in ("sample_sizes", "tuning_grid", "alpha_levels", "statistics"):
            v = getattr(self, name)
            object.__setattr__(self, name, tuple(v) if isinstance(v, (list, tuple)) else (v,))
        if int(self.replications) != self.replications or self.replications < 100:
            raise InvalidPlanError(f"replications must be an integer >= 100, got {self.replications!r}")
        if not self.sample_sizes or any(int(n) != n or n < 2 for n in self.sample_sizes):
            raise InvalidPlanError(f"sample sizes must be integers >= 2, got {self.sample_sizes!r}")
        if not self.alpha_levels or any(not 0 < al < 1 for al in self.alpha_levels):
            raise InvalidPlanError(f"alpha levels must lie in (0, 1), got {self.alpha_levels!r}")
        if any(not (a > 0 and math.isfinite(a)) for a in self.tuning_grid):
            raise InvalidPlanError(f"tuning parameters must be positive, got {self.tuning_grid!r}")
        if not self.statistics:
            raise InvalidPlanError("plan lists no statistics")
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        try:
            self.cells()
        except InvalidArgumentError as exc:
            raise InvalidPlanError(str(exc)) from None

    def cells(self) -> list[StatisticId]:
        """Statistic identities of the plan; bare G1/G2 names expand over the tuning grid."""
        out: list[StatisticId] = []
        for entry in self.statistics:
            if isinstance(entry, StatisticId):
                ids = [entry]
            elif str(entry).lower() in ("g1", "g2"):
                ids = [StatisticId(str(entry).lower(), a) for a in self.tuning_grid]
            elif str(entry).lower() in STATISTICS:
                ids = [StatisticId.of(str(entry))]
            else:
                raise InvalidArgumentError(f"unknown statistic {entry!r}; expected one of {', '.join(STATISTICS)}")
            out.extend(i for i in ids if i not in out)
        return out


def empirical_quantile(values, q: float) -> float:
    """The ceil(q R)-th smallest of R values."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InvalidArgumentError("empirical_quantile needs at least one value")
    if not 0 < q < 1:
        raise InvalidArgumentError(f"q must lie in (0, 1), got {q!r}")
    # guard against q * R landing a hair above an integer through rounding
    rank = math.ceil(q * v.size - 1e-9 * v.size * q)
    rank = min(max(rank, 1), v.size)
    return float(np.partition(v, rank - 1)[rank - 1])


def estimate_pvalue(statistic_value: float, null_values) -> float:
    """(1 + #{null >= value}) / (1 + R)."""
    return mc_pvalue(statistic_value, null_values)


def _alternative_tag(spec: AlternativeSpec) -> int:
    return zlib.crc32(spec.name.encode())


def _draw_block(root: RandomStream, tag: int, n: int, b: int, size: int, spec: AlternativeSpec | None):
    def draw(stream):
        rng = stream.generator()
        if spec is None:
            return rng.standard_normal((size, n))
        return draw_alternative(spec, (size, n), rng)

    y, bad = residual_matrix(draw(root.child(tag, n, b)))
    attempt = 0
    redrawn = 0
    while bad.any():
        attempt += 1
        idx = np.flatnonzero(bad)
        fresh, fresh_bad = residual_matrix(draw(root.child(tag, n, b, attempt))[: idx.size])
        y[idx] = fresh
        bad[idx] = fresh_bad
        redrawn += idx.size
    if redrawn:
        log.info("block (%d, %d, %d): re-drew %d degenerate samples", tag, n, b, redrawn)
    return y, redrawn


def _simulate(stats: list[StatisticId], n: int, replications: int, root: RandomStream, tag: int,
              spec: AlternativeSpec | None, workers: int | None) -> np.ndarray:
    """(len(stats), replications) array of statistic values."""
    blocks = [(b, min(BLOCK, replications - start)) for b, start in enumerate(range(0, replications, BLOCK))]

    def run(job):
        b, size = job
        y, _ = _draw_block(root, tag, n, b, size, spec)
        return np.stack([evaluate(st, y) for st in stats])

    nthreads = min(worker_count(workers), len(blocks))
    if nthreads == 1:
        parts = [run(j) for j in blocks]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            parts = list(pool.map(run, blocks))
    return np.concatenate(parts, axis=1)


def simulate_null(plan: SimulationPlan, n: int, workers: int | None = None) -> dict[StatisticId, np.ndarray]:
    """Statistic values on ``plan.replications`` standard-normal samples of size ``n``."""
    stats = plan.cells()
    values = _simulate(stats, n, plan.replications, RandomStream(plan.master_seed), NULL_TAG, None, workers)
    return dict(zip(stats, values))


def simulate_critical_values(plan: SimulationPlan, workers: int | None = None) -> CriticalValueTable:
    entries, nulls = {}, {}
    for n in plan.sample_sizes:
        for st, vals in simulate_null(plan, n, workers).items():
            vals = np.sort(vals)
            for al in plan.alpha_levels:
                entries[(st.kind, st.param, n, float(al))] = empirical_quantile(vals, 1.0 - al)
            if plan.keep_null_values:
                vals.setflags(write=False)
                nulls[(st.kind, st.param, n)] = vals
    return CriticalValueTable(entries, plan.replications, plan.master_seed, nulls)


def simulate_power(plan: SimulationPlan, alternatives, table: CriticalValueTable, alpha: float = 0.05,
                   workers: int | None = None) -> PowerTable:
    """Rejection rates (value > critical value) per alternative, statistic and n."""
    specs = [a if isinstance(a, AlternativeSpec) else parse_spec(a) for a in alternatives]
    stats = plan.cells()
    crit = {}
    for n in plan.sample_sizes:
        for st in stats:
            crit[(st, n)] = table.lookup(st.kind, st.param, n, alpha)  # fails before any simulation
    root = RandomStream(plan.master_seed)
    entries = {}
    for spec in specs:
        for n in plan.sample_sizes:
            values = _simulate(stats, n, plan.replications, root, _alternative_tag(spec), spec, workers)
            for st, vals in zip(stats, values):
                entries[(spec.name, st.kind, st.param, n)] = float(np.mean(vals > crit[(st, n)]))
    return PowerTable(entries, plan.replications, plan.master_seed, float(alpha))


def missing_cells(plan: SimulationPlan, table: CriticalValueTable, alpha: float = 0.05) -> list:
    out = []
    for n in plan.sample_sizes:
        for st in plan.cells():
            try:
                table.lookup(st.kind, st.param, n, alpha)
            except MissingCriticalValueError:
                out.append((st.kind, st.param, n, alpha))
    return out

"""Carrying out a test: statistic identities, batch evaluation and reports."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .competitors import bcmr_batch, bhep_batch, hjg_batch
from .errors import InvalidArgumentError
from .statistics import ScaledResiduals, g1_batch, g2_batch, scaled_residuals
from .tables import CriticalValueTable

STATISTICS = ("g1", "g2", "bhep", "hjg", "bcmr")

# default tuning parameter per statistic
DEFAULT_PARAM = {"g1": 1.0, "g2": 1.0, "bhep": 1.0, "hjg": 5.0, "bcmr": None}


@dataclass(frozen=True)
class StatisticId:
    """A statistic together with its tuning parameter (``a`` or ``beta``)."""

    kind: str
    param: float | None = None

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind not in STATISTICS:
            raise InvalidArgumentError(f"unknown statistic {self.kind!r}; expected one of {', '.join(STATISTICS)}")
        if kind == "bcmr":
            if self.param is not None:
                raise InvalidArgumentError("BCMR takes no tuning parameter")
            return
        if self.param is None:
            raise InvalidArgumentError(f"{kind} needs a tuning parameter")
        p = float(self.param)
        object.__setattr__(self, "param", p)
        if not (np.isfinite(p) and p > 0):
            raise InvalidArgumentError(f"{kind}: tuning parameter must be positive and finite, got {p!r}")
        if kind == "hjg" and not p > 2:
            raise InvalidArgumentError("HJG needs beta > 2 (the weight integral diverges otherwise)")

    @classmethod
    def of(cls, kind: str, param: float | None = None) -> "StatisticId":
        kind = str(kind).lower()
        if param is None and kind in DEFAULT_PARAM:
            param = DEFAULT_PARAM[kind]
        return cls(kind, param)

    @property
    def label(self) -> str:
        return self.kind if self.param is None else f"{self.kind}[{self.param:g}]"


def evaluate(stat: StatisticId, y) -> np.ndarray:
    """Values of ``stat`` on each row of sorted residuals ``y``."""
    if isinstance(y, ScaledResiduals):
        y = y.values
    if stat.kind == "g1":
        return g1_batch(y, stat.param)
    if stat.kind == "g2":
        return g2_batch(y, stat.param)
    if stat.kind == "bhep":
        return bhep_batch(y, stat.param)
    if stat.kind == "hjg":
        return hjg_batch(y, stat.param)
    return bcmr_batch(y)


def statistic_value(stat: StatisticId, sample) -> float:
    r = sample if isinstance(sample, ScaledResiduals) else scaled_residuals(sample)
    return float(evaluate(stat, r)[0])


def mc_pvalue(value: float, null_values) -> float:
    """Add-one Monte Carlo p-value (1 + #{null >= value}) / (1 + R)."""
    null = np.asarray(null_values, dtype=float).ravel()
    if null.size == 0:
        raise InvalidArgumentError("null sample must be nonempty")
    return float((1 + np.count_nonzero(null >= value)) / (1 + null.size))


@dataclass(frozen=True)
class TestReport:
    statistic: str
    param: float | None
    n: int
    value: float
    critical_value: float
    alpha: float
    reject: bool
    p_value: float | None = None
    replications: int = 0
    seed: int = 0

    __test__ = False  # not a pytest class

    @property
    def decision(self) -> str:
        return "reject" if self.reject else "accept"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["decision"] = self.decision
        return d

    def render(self) -> str:
        lines = [
            f"statistic       {self.statistic}" + ("" if self.param is None else f" (param {self.param:g})"),
            f"n               {self.n}",
            f"value           {self.value:.6g}",
            f"critical value  {self.critical_value:.6g}  (alpha {self.alpha:g})",
            f"decision        {self.decision}",
        ]
        if self.p_value is not None:
            lines.append(f"p-value         {self.p_value:.4g}")
        lines.append(f"table           {self.replications} replications, seed {self.seed}")
        return "\n".join(lines)


def run_test(sample, statistic: str | StatisticId = "g2", a: float | None = None, alpha: float = 0.05,
             table: CriticalValueTable | None = None) -> TestReport:
    """Test normality of ``sample``; rejects iff the statistic exceeds the tabulated critical value.

    ``a`` is the tuning parameter (``beta`` for BHEP/HJG). The bundled table
    is used when ``table`` is None.
    """
    stat = statistic if isinstance(statistic, StatisticId) else StatisticId.of(statistic, a)
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha!r}")
    r = scaled_residuals(sample)
    if table is None:
        from .tables import load_bundled_table
        table = load_bundled_table()
    crit = table.lookup(stat.kind, stat.param, r.n, alpha)
    value = float(evaluate(stat, r)[0])
    null = table.null_values.get((stat.kind, stat.param, r.n))
    p = None if null is None else mc_pvalue(value, null)
    return TestReport(stat.kind, stat.param, r.n, value, crit, float(alpha), bool(value > crit), p,
                      table.replications, table.seed)

"""Critical-value and power tables with CSV and JSON serialization.

Floats are written with ``repr`` so that reading a written table gives back
exactly the same numbers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import InvalidArgumentError, MissingCriticalValueError

CV_HEADER = ("statistic", "a", "n", "alpha", "quantile", "replications", "seed")
POWER_HEADER = ("alternative", "statistic", "param", "n", "rate", "replications", "seed")

BUNDLED_TABLE = "critical_values.csv"

# BCMR subtracts its null mean correction, so its quantiles may be negative
SIGNED_STATISTICS = frozenset({"bcmr"})

# (statistic, param, n, alpha)
CVKey = tuple[str, "float | None", int, float]
# (alternative, statistic, param, n)
PowerKey = tuple[str, str, "float | None", int]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _param(text: str) -> float | None:
    text = text.strip()
    return None if text == "" else float(text)


def _key_order(key):
    return tuple((0, "") if v is None else (1, v) for v in key)


@dataclass
class CriticalValueTable:
    """Empirical 1 - alpha quantiles keyed by (statistic, param, n, alpha).

    ``param`` is the tuning parameter of the statistic (``a`` for G1/G2,
    ``beta`` for the competitors, ``None`` for BCMR). The null values the
    quantiles were taken from are kept in memory when available so that
    Monte Carlo p-values can be reported; they are not serialized.
    """

    entries: dict = field(default_factory=dict)
    replications: int = 0
    seed: int = 0
    null_values: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for key, value in self.entries.items():
            if not math.isfinite(value):
                raise InvalidArgumentError(f"critical value for {key} must be finite, got {value!r}")
            if key[0] not in SIGNED_STATISTICS and not value > 0:
                raise InvalidArgumentError(f"critical value for {key} must be positive, got {value!r}")

    def lookup(self, statistic: str, param: float | None, n: int, alpha: float) -> float:
        key = (statistic, None if param is None else float(param), int(n), float(alpha))
        try:
            return self.entries[key]
        except KeyError:
            raise MissingCriticalValueError(self._missing_message(key), self.closest(*key)) from None

    def closest(self, statistic: str, param, n: int, alpha: float):
        """The tabulated (param, n) nearest to the request for the same statistic and alpha."""
        cands = [(p, m) for (s, p, m, al) in self.entries if s == statistic and al == alpha]
        if not cands:
            return None
        def dist(c):
            p, m = c
            dp = 0.0 if (p is None or param is None) else abs(math.log(p / param))
            return (abs(math.log(m / n)), dp)
        return min(cands, key=dist)

    def _missing_message(self, key) -> str:
        statistic, param, n, alpha = key
        msg = f"no critical value for statistic={statistic}, param={param}, n={n}, alpha={alpha}"
        near = self.closest(*key)
        if near is not None:
            msg += f"; closest tabulated cell is param={near[0]}, n={near[1]} (values are never interpolated)"
        return msg

    def cells(self) -> list:
        return sorted(self.entries, key=_key_order)

    def merge(self, other: "CriticalValueTable") -> "CriticalValueTable":
        entries = dict(self.entries)
        entries.update(other.entries)
        nulls = dict(self.null_values)
        nulls.update(other.null_values)
        return CriticalValueTable(entries, other.replications or self.replications,
                                  other.seed if other.entries else self.seed, nulls)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CV_HEADER)
        for key in self.cells():
            stat, param, n, alpha = key
            w.writerow([stat, _fmt(param), n, _fmt(alpha), _fmt(self.entries[key]), self.replications, self.seed])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CriticalValueTable":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(h.strip() for h in rows[0]) != CV_HEADER:
            raise InvalidArgumentError(f"critical-value CSV must start with header {','.join(CV_HEADER)}")
        entries, reps, seed = {}, 0, 0
        for row in rows[1:]:
            if not row:
                continue
            stat, a, n, alpha, q, r, s = row
            entries[(stat, _param(a), int(n), float(alpha))] = float(q)
            reps, seed = int(r), int(s)
        return cls(entries, reps, seed)

    def to_json(self) -> str:
        cells = [{"statistic": s, "a": p, "n": n, "alpha": al, "quantile": self.entries[(s, p, n, al)]}
                 for (s, p, n, al) in self.cells()]
        return json.dumps({"replications": self.replications, "seed": self.seed, "entries": cells}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CriticalValueTable":
        doc = json.loads(text)
        entries = {(c["statistic"], None if c["a"] is None else float(c["a"]), int(c["n"]), float(c["alpha"])):
                   float(c["quantile"]) for c in doc["entries"]}
        return cls(entries, int(doc["replications"]), int(doc["seed"]))

    def write(self, path: str | Path, fmt: str | None = None) -> None:
        path = Path(path)
        fmt = fmt or ("json" if path.suffix == ".json" else "csv")
        path.write_text(self.to_json() if fmt == "json" else self.to_csv())

    @classmethod
    def read(cls, path: str | Path) -> "CriticalValueTable":
        path = Path(path)
        text = path.read_text()
        return cls.from_json(text) if text.lstrip().startswith("{") else cls.from_csv(text)


@dataclass
class PowerTable:
    """Empirical rejection rates keyed by (alternative, statistic, param, n)."""

    entries: dict = field(default_factory=dict)
    replications: int = 0
    seed: int = 0
    alpha: float = 0.05

    def __post_init__(self):
        for key, value in self.entries.items():
            if not 0.0 <= value <= 1.0:
                raise InvalidArgumentError(f"rejection rate for {key} must lie in [0, 1], got {value!r}")

    def rate(self, alternative: str, statistic: str, param: float | None, n: int) -> float:
        key = (alternative, statistic, None if param is None else float(param), int(n))
        if key not in self.entries:
            raise InvalidArgumentError(f"power table has no cell {key}")
        return self.entries[key]

    def cells(self) -> list:
        return sorted(self.entries, key=_key_order)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(POWER_HEADER)
        for key in self.cells():
            alt, stat, param, n = key
            w.writerow([alt, stat, _fmt(param), n, _fmt(self.entries[key]), self.replications, self.seed])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, alpha: float = 0.05) -> "PowerTable":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(h.strip() for h in rows[0]) != POWER_HEADER:
            raise InvalidArgumentError(f"power CSV must start with header {','.join(POWER_HEADER)}")
        entries, reps, seed = {}, 0, 0
        for row in rows[1:]:
            if not row:
                continue
            alt, stat, p, n, rate, r, s = row
            entries[(alt, stat, _param(p), int(n))] = float(rate)
            reps, seed = int(r), int(s)
        return cls(entries, reps, seed, alpha)

    def to_json(self) -> str:
        cells = [{"alternative": a, "statistic": s, "param": p, "n": n, "rate": self.entries[(a, s, p, n)]}
                 for (a, s, p, n) in self.cells()]
        return json.dumps({"replications": self.replications, "seed": self.seed, "alpha": self.alpha,
                           "entries": cells}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "PowerTable":
        doc = json.loads(text)
        entries = {(c["alternative"], c["statistic"], None if c["param"] is None else float(c["param"]),
                    int(c["n"])): float(c["rate"]) for c in doc["entries"]}
        return cls(entries, int(doc["replications"]), int(doc["seed"]), float(doc.get("alpha", 0.05)))

    def write(self, path: str | Path, fmt: str | None = None) -> None:
        path = Path(path)
        fmt = fmt or ("json" if path.suffix == ".json" else "csv")
        path.write_text(self.to_json() if fmt == "json" else self.to_csv())


def load_bundled_table() -> CriticalValueTable:
    """The critical-value table shipped with the package."""
    text = resources.files("zbtest").joinpath("data", BUNDLED_TABLE).read_text()
    return CriticalValueTable.from_csv(text)

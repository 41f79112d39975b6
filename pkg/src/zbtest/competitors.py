"""Competing normality statistics: BHEP, HJG and BCMR.

All functions take sorted scaled residuals, either a single
:class:`~zbtest.statistics.ScaledResiduals` or an (R, n) batch. BCMR is
affine invariant in its own right, so feeding it residuals instead of the raw
data does not change its value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate as _scipy_integrate

from .errors import InvalidArgumentError
from .numerics import std_normal_pdf, std_normal_ppf
from .statistics import ScaledResiduals, _as_batch, scaled_residuals

# upper bound on elements of the (rows, n, n) pair tensor built per chunk
_PAIR_BUDGET = 2_000_000

KINDS = ("bhep", "hjg", "bcmr")


@dataclass(frozen=True)
class CompetitorId:
    kind: str
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown competitor {self.kind!r}; expected one of {KINDS}")
        if self.kind == "bhep" and not (self.beta is not None and self.beta > 0):
            raise InvalidArgumentError("BHEP needs beta > 0")
        if self.kind == "hjg" and not (self.beta is not None and self.beta > 2):
            raise InvalidArgumentError("HJG needs beta > 2 (the weight integral diverges otherwise)")
        if self.kind == "bcmr" and self.beta is not None:
            raise InvalidArgumentError("BCMR takes no tuning parameter")


def _pair_sums(y: np.ndarray, kernel) -> np.ndarray:
    """sum_{j,k} kernel(Y_j, Y_k) for each row, in memory-bounded chunks."""
    rows, n = y.shape
    step = max(1, _PAIR_BUDGET // (n * n))
    out = np.empty(rows)
    for start in range(0, rows, step):
        block = y[start:start + step]
        out[start:start + step] = kernel(block[:, :, None], block[:, None, :]).sum(axis=(1, 2))
    return out


def bhep_batch(y, beta: float = 1.0) -> np.ndarray:
    beta = float(beta)
    if not beta > 0:
        raise InvalidArgumentError("BHEP needs beta > 0")
    y = _as_batch(y)
    n = y.shape[1]
    b2 = beta * beta
    double = _pair_sums(y, lambda u, v: np.exp(-0.5 * b2 * (u - v) ** 2)) / n
    single = np.exp(-b2 / (2.0 * (1.0 + b2)) * y * y).sum(axis=1)
    return double - 2.0 / math.sqrt(1.0 + b2) * single + n / math.sqrt(1.0 + 2.0 * b2)


def hjg_batch(y, beta: float) -> np.ndarray:
    beta = float(beta)
    if not beta > 2:
        raise InvalidArgumentError("HJG needs beta > 2 (the weight integral diverges otherwise)")
    y = _as_batch(y)
    n = y.shape[1]
    double = _pair_sums(y, lambda u, v: np.exp((u + v) ** 2 / (4.0 * beta))) / (n * math.sqrt(beta))
    single = np.exp(y * y / (4.0 * beta - 2.0)).sum(axis=1)
    return double - 2.0 / math.sqrt(beta - 0.5) * single + n / math.sqrt(beta - 1.0)


@lru_cache(maxsize=None)
def bcmr_cell_weights(n: int) -> np.ndarray:
    """Integrals of the normal quantile function over [(k-1)/n, k/n], k = 1..n.

    Uses the antiderivative -phi(Phi^-1(t)).
    """
    edges = std_normal_pdf(std_normal_ppf(np.arange(n + 1) / n))
    w = edges[:-1] - edges[1:]
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def bcmr_correction(n: int) -> float:
    """Integral of t(1-t) / phi(Phi^-1(t))^2 over [1/(n+1), n/(n+1)]."""
    lo, hi = 1.0 / (n + 1), n / (n + 1.0)

    def f(t):
        return t * (1.0 - t) / float(std_normal_pdf(std_normal_ppf(t))) ** 2

    # the integrand steepens towards both ends; refine there
    pts = [lo + (hi - lo) * p for p in (0.001, 0.01, 0.1, 0.5, 0.9, 0.99, 0.999)]
    value, _ = _scipy_integrate.quad(f, lo, hi, points=pts, epsabs=1e-13, epsrel=1e-12, limit=500)
    return value


def bcmr_batch(y) -> np.ndarray:
    y = _as_batch(y)
    n = y.shape[1]
    # rows are residuals: centred with unit biased variance
    centred = y - y.mean(axis=1, keepdims=True)
    var = np.mean(centred ** 2, axis=1)
    proj = centred @ bcmr_cell_weights(n)
    return n * (1.0 - proj ** 2 / var) - bcmr_correction(n)


def bhep(r: ScaledResiduals, beta: float = 1.0) -> float:
    return float(bhep_batch(r.values, beta)[0])


def hjg(r: ScaledResiduals, beta: float) -> float:
    return float(hjg_batch(r.values, beta)[0])


def bcmr(sample) -> float:
    """BCMR statistic of a raw sample (or of its residuals)."""
    r = sample if isinstance(sample, ScaledResiduals) else scaled_residuals(sample)
    return float(bcmr_batch(r.values)[0])

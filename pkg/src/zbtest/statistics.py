"""Scaled residuals and the two zero-bias test statistics.

Each statistic has two implementations. The ``*_quadrature`` functions
integrate the defining weighted L2 distance numerically and are the
reference; the ``*_closed_form`` functions evaluate the equivalent finite
sums and are what the simulation engine uses. The double sums over ordered
pairs j < k are evaluated with running prefix sums over the sorted
residuals, so a whole batch of samples costs O(R n) after sorting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DegenerateSampleError, SampleTooSmallError
from .numerics import (
    DEFAULT_QUADRATURE,
    SQRT_2PI,
    QuadratureConfig,
    _check_a,
    gauss_weight,
    integrate,
    phi_sq_weight_integral,
    std_normal_cdf,
    upper_phi_weight_integral,
    upper_phi_weight_integral_owen,
)


@dataclass(frozen=True)
class ScaledResiduals:
    """Order statistics of (X_j - mean) / S_n with S_n^2 the biased variance."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.size)


def scaled_residuals(sample) -> ScaledResiduals:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise SampleTooSmallError(f"sample too small: need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DegenerateSampleError("sample contains non-finite values")
    centred = x - x.mean()
    sd = math.sqrt(float(np.mean(centred ** 2)))
    if sd == 0.0 or np.ptp(x) == 0.0:
        raise DegenerateSampleError("degenerate sample: all observations are equal")
    y = np.sort(centred / sd)
    y.setflags(write=False)
    return ScaledResiduals(y)


def residual_matrix(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise sorted scaled residuals of an (R, n) array of samples.

    Returns the residuals and a boolean mask of degenerate (zero-variance)
    rows; degenerate rows are filled with NaN.
    """
    x = np.asarray(samples, dtype=float)
    centred = x - x.mean(axis=1, keepdims=True)
    sd = np.sqrt(np.mean(centred ** 2, axis=1, keepdims=True))
    bad = (sd[:, 0] == 0.0) | (np.ptp(x, axis=1) == 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        y = centred / sd
    y[bad] = np.nan
    y.sort(axis=1)
    return y, bad


def _as_batch(r) -> np.ndarray:
    if isinstance(r, ScaledResiduals):
        return r.values[None, :]
    y = np.asarray(r, dtype=float)
    return y[None, :] if y.ndim == 1 else y


def _exclusive_cumsum(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    np.cumsum(v[:, :-1], axis=1, out=out[:, 1:])
    return out


def g1_batch(y: np.ndarray, a: float) -> np.ndarray:
    """First statistic for each row of sorted residuals ``y`` (shape (R, n))."""
    a = _check_a(a)
    y = _as_batch(y)
    n = y.shape[1]
    y2 = y * y
    upper = special.ndtr(-y / math.sqrt(a))
    expo = a / math.sqrt(2.0 * math.pi * a) * np.exp(-y2 / (2.0 * a))
    s1 = _exclusive_cumsum(y)       # sum_{j<k} Y_j
    s2 = _exclusive_cumsum(y2)      # sum_{j<k} Y_j^2
    before = np.arange(n, dtype=float)[None, :]
    pairs = (upper * ((y2 - 1.0) * (s2 - before) + a * y * s1)
             + expo * (-y * s2 + y * before + s1))
    single = upper * (y2 * y2 + (a - 2.0) * y2 + 1.0) + expo * (2.0 * y - y2 * y)
    return (2.0 * pairs.sum(axis=1) + single.sum(axis=1)) / n


def g2_batch(y: np.ndarray, a: float) -> np.ndarray:
    """Second statistic for each row of sorted residuals ``y`` (shape (R, n))."""
    a = _check_a(a)
    y = _as_batch(y)
    n = y.shape[1]
    y2 = y * y
    upper = special.ndtr(-y / math.sqrt(a))
    w = gauss_weight(y, a)
    s1 = _exclusive_cumsum(y)
    s2 = _exclusive_cumsum(y2)
    pairs = upper * (y2 * s2 + a * y * s1) - a * y * w * s2
    tail = upper_phi_weight_integral_owen(y, a)
    single = (y2 / n) * ((y2 + a) * upper - a * y * w) - 2.0 * y * (
        y * tail
        - a * special.ndtr(y) * w
        - a / (SQRT_2PI * math.sqrt(1.0 + a)) * special.ndtr(-math.sqrt((1.0 + a) / a) * y)
    )
    return 2.0 / n * pairs.sum(axis=1) + single.sum(axis=1) + n * phi_sq_weight_integral(a)


def g1_closed_form(r: ScaledResiduals, a: float) -> float:
    return float(g1_batch(r.values, a)[0])


def g2_closed_form(r: ScaledResiduals, a: float) -> float:
    return float(g2_batch(r.values, a)[0])


def empirical_zero_bias_cdf_residuals(y: np.ndarray, t: float) -> float:
    """n^-1 sum_j Y_j (Y_j - t) 1{Y_j <= t} for residuals ``y``."""
    below = y[y <= t]
    return float(np.sum(below * (below - t))) / y.size


def _weighted_l2(r: ScaledResiduals, a: float, reference, cfg: QuadratureConfig) -> float:
    a = _check_a(a)
    y = r.values

    def integrand(t):
        diff = empirical_zero_bias_cdf_residuals(y, t) - reference(y, t)
        return diff * diff * math.exp(-t * t / (2.0 * a)) / math.sqrt(2.0 * math.pi * a)

    value = integrate(integrand, cfg=cfg, breakpoints=y, scale=math.sqrt(a))
    return max(r.n * value, 0.0)


def g1_quadrature(r: ScaledResiduals, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """n times the weighted L2 distance between the empirical zero-bias cdf and the ecdf."""
    return _weighted_l2(r, a, lambda y, t: np.count_nonzero(y <= t) / y.size, cfg)


def g2_quadrature(r: ScaledResiduals, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """n times the weighted L2 distance between the empirical zero-bias cdf and Phi."""
    return _weighted_l2(r, a, lambda y, t: float(std_normal_cdf(t)), cfg)


def g2_closed_form_quadrature_tails(r: ScaledResiduals, a: float,
                                    cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Closed form of the second statistic with the per-point tail integrals done by quadrature.

    One quadrature per distinct residual; used to cross-check the Owen's T
    evaluation inside :func:`g2_batch`.
    """
    a = _check_a(a)
    y = r.values
    distinct, inverse = np.unique(y, return_inverse=True)
    tails = np.array([upper_phi_weight_integral(v, a, cfg) for v in distinct])[inverse]
    n = y.size
    y2 = y * y
    upper = special.ndtr(-y / math.sqrt(a))
    w = gauss_weight(y, a)
    total = n * phi_sq_weight_integral(a)
    for k in range(n):
        for j in range(k):
            total += 2.0 / n * y[j] * y[k] * ((y[j] * y[k] + a) * upper[k] - a * y[j] * w[k])
        total += y2[k] / n * ((y2[k] + a) * upper[k] - a * y[k] * w[k])
        total -= 2.0 * y[k] * (y[k] * tails[k] - a * special.ndtr(y[k]) * w[k]
                               - a / (SQRT_2PI * math.sqrt(1.0 + a)) * special.ndtr(-math.sqrt((1 + a) / a) * y[k]))
    return float(total)

"""The zero-bias transformation of a continuous law and its empirical version.

For a centred random variable X with unit variance and density p the
X-zero bias law has

    density   d(t) = E[X 1{X > t}] = -E[X 1{X <= t}]
    cdf       F(t) = E[X (X - t) 1{X <= t}]

and the standard normal law is the unique fixed point of the map.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DegenerateSampleError, InvalidModelError, SampleTooSmallError
from .numerics import DEFAULT_QUADRATURE, QuadratureConfig, integrate, std_normal_cdf, std_normal_pdf

log = logging.getLogger(__name__)

Sampler = Callable[[np.random.Generator, "int | tuple[int, ...]"], np.ndarray]


@dataclass(frozen=True)
class DistributionModel:
    """A continuous law given by density, distribution function and moments.

    ``sampler`` is optional; when absent, draws are produced by inverting a
    tabulated ``cdf``. ``breakpoints`` lists interior points where the density
    is not smooth (support ends are added automatically).
    """

    density: Callable[[float], float]
    cdf: Callable[[float], float]
    support: tuple[float, float] = (-math.inf, math.inf)
    mean: float = 0.0
    variance: float = 1.0
    name: str = "model"
    sampler: Sampler | None = field(default=None, compare=False)
    breakpoints: tuple[float, ...] = ()

    @property
    def is_standardized(self) -> bool:
        return abs(self.mean) <= 1e-9 and abs(self.variance - 1.0) <= 1e-9

    def kinks(self) -> list[float]:
        return [x for x in (*self.support, *self.breakpoints) if math.isfinite(x)]

    def expect(self, g: Callable[[float], float], upper: float = math.inf, lower: float = -math.inf,
               cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
        """E[g(X) 1{lower < X <= upper}] by quadrature of g * density."""
        lo = max(lower, self.support[0])
        hi = min(upper, self.support[1])
        if lo >= hi:
            return 0.0
        return integrate(lambda x: g(x) * self.density(x), lo, hi, cfg, breakpoints=self.kinks())

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.sampler is not None:
            return self.sampler(rng, size)
        return _inverse_cdf_table(self)(rng.random(size))


def standard_normal_model() -> DistributionModel:
    return DistributionModel(
        density=lambda x: float(std_normal_pdf(x)),
        cdf=lambda x: float(std_normal_cdf(x)),
        name="normal(0,1)",
        sampler=lambda rng, size: rng.standard_normal(size),
    )


def standardize(model: DistributionModel) -> DistributionModel:
    """Affine push-forward of ``model`` onto mean 0 and variance 1."""
    mu, var = float(model.mean), float(model.variance)
    if not (math.isfinite(mu) and math.isfinite(var)):
        raise InvalidModelError(f"{model.name}: moments must be finite")
    if var <= 0:
        raise InvalidModelError(f"{model.name}: variance must be positive, got {var}")
    if mu == 0.0 and var == 1.0:
        return model
    sd = math.sqrt(var)
    dens, cdf, sampler = model.density, model.cdf, model.sampler
    lo, hi = model.support
    return replace(
        model,
        density=lambda y: sd * dens(mu + sd * y),
        cdf=lambda y: cdf(mu + sd * y),
        support=((lo - mu) / sd, (hi - mu) / sd),
        mean=0.0,
        variance=1.0,
        sampler=None if sampler is None else (lambda rng, size: (sampler(rng, size) - mu) / sd),
        breakpoints=tuple((b - mu) / sd for b in model.breakpoints),
    )


def _require_standardized(model: DistributionModel):
    if not model.is_standardized:
        raise InvalidModelError(f"{model.name}: zero-bias quantities need a standardized model")


def zero_bias_cdf(model: DistributionModel, t: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """F^X(t) = E[X (X - t) 1{X <= t}], clamped to [0, 1]."""
    _require_standardized(model)
    t = float(t)
    raw = model.expect(lambda x: x * (x - t), upper=t, cfg=cfg)
    value = min(max(raw, 0.0), 1.0)
    if value != raw and abs(value - raw) > 10 * cfg.abs_tol:
        log.debug("zero_bias_cdf(%s, %r): clamped pre-clamp value %r", model.name, t, raw)
    return value


def zero_bias_density_forms(model: DistributionModel, t: float,
                            cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> tuple[float, float]:
    """Both representations (E[X 1{X > t}], -E[X 1{X <= t}]) of d^X(t)."""
    _require_standardized(model)
    t = float(t)
    upper = model.expect(lambda x: x, lower=t, cfg=cfg)
    lower = -model.expect(lambda x: x, upper=t, cfg=cfg)
    return upper, lower


def zero_bias_density(model: DistributionModel, t: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    # the tail-side form avoids cancellation against E[X] = 0
    upper, lower = zero_bias_density_forms(model, t, cfg)
    if abs(upper - lower) > 1e3 * cfg.abs_tol:
        log.debug("zero_bias_density(%s, %r): forms differ by %g", model.name, t, abs(upper - lower))
    return max(upper if t >= 0 else lower, 0.0)


def _grid_for(model: DistributionModel, radius: float, step: float) -> np.ndarray:
    lo = max(model.support[0], -radius)
    hi = min(model.support[1], radius)
    num = max(int(math.ceil((hi - lo) / step)), 2) + 1
    grid = np.union1d(np.linspace(lo, hi, num), [k for k in model.kinks() if lo <= k <= hi])
    return grid


def _partial_moments(model: DistributionModel, grid: np.ndarray, cfg: QuadratureConfig):
    """Left and right partial moments E[X^k 1{X <= g}], E[X^k 1{X > g}], k = 1, 2."""
    seg = np.array([[model.expect(lambda x, k=k: x ** k, lower=lo, upper=hi, cfg=cfg) for k in (1, 2)]
                    for lo, hi in zip(grid[:-1], grid[1:])]).T.reshape(2, -1)
    head = np.array([model.expect(lambda x, k=k: x ** k, upper=grid[0], cfg=cfg) for k in (1, 2)])
    tail = np.array([model.expect(lambda x, k=k: x ** k, lower=grid[-1], cfg=cfg) for k in (1, 2)])
    left = head[:, None] + np.concatenate([np.zeros((2, 1)), np.cumsum(seg, axis=1)], axis=1)
    right = tail[:, None] + np.concatenate([np.cumsum(seg[:, ::-1], axis=1)[:, ::-1], np.zeros((2, 1))], axis=1)
    return left, right


@dataclass(frozen=True)
class ZeroBiasLaw:
    """Zero-bias law of a standardized model, tabulated for fast evaluation.

    :meth:`cdf` and :meth:`density` interpolate monotone cubic tables built
    eagerly in :meth:`build`, so instances are safe to share between threads.
    The exact quadrature values remain available through
    :func:`zero_bias_cdf` and :func:`zero_bias_density`.
    """

    source: DistributionModel
    grid: np.ndarray
    cdf_table: np.ndarray
    density_table: np.ndarray
    _cdf: PchipInterpolator = field(repr=False)
    _density: PchipInterpolator = field(repr=False)

    @classmethod
    def build(cls, model: DistributionModel, radius: float = 12.0, step: float = 0.01,
              cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> "ZeroBiasLaw":
        _require_standardized(model)
        grid = _grid_for(model, radius, step)
        (m1, m2), (r1, r2) = _partial_moments(model, grid, cfg)
        # use the tail on the far side of zero: values there are tiny and differences would cancel
        cdf_vals = np.clip(np.where(grid < 0, m2 - grid * m1, 1.0 - (r2 - grid * r1)), 0.0, 1.0)
        dens_vals = np.maximum(np.where(grid < 0, -m1, r1), 0.0)
        return cls(
            source=model, grid=grid, cdf_table=cdf_vals, density_table=dens_vals,
            _cdf=PchipInterpolator(grid, cdf_vals, extrapolate=False),
            _density=PchipInterpolator(grid, dens_vals, extrapolate=False),
        )

    def _eval(self, interp, t, exact):
        t = np.asarray(t, dtype=float)
        out = np.asarray(interp(np.clip(t, self.grid[0], self.grid[-1])), dtype=float)
        outside = (t < self.grid[0]) | (t > self.grid[-1])
        if outside.any():
            out = out.copy()
            out[outside] = [exact(self.source, v) for v in t[outside]]
        return out[()] if out.ndim == 0 else out

    def cdf(self, t):
        return self._eval(self._cdf, t, zero_bias_cdf)

    def density(self, t):
        return self._eval(self._density, t, zero_bias_density)


def empirical_zero_bias_cdf(sample, s):
    """Empirical zero-bias distribution function of a raw sample.

    n^-1 sum_j (X_j - mean) / S^2 * (X_j - s) * 1{X_j <= s}, with S^2 the
    biased sample variance. Vectorised over ``s``.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise SampleTooSmallError("sample too small: need at least 2 observations")
    centred = x - x.mean()
    var = np.mean(centred ** 2)
    if not var > 0:
        raise DegenerateSampleError("degenerate sample: zero variance")
    s = np.asarray(s, dtype=float)
    diff = x[:, None] - s.ravel()[None, :]
    terms = (centred / var)[:, None] * diff * (diff <= 0)
    out = terms.sum(axis=0).reshape(s.shape) / x.size
    return out[()] if out.ndim == 0 else out


def _inverse_cdf_table(model: DistributionModel, num: int = 20001):
    lo, hi = model.support
    lo = lo if math.isfinite(lo) else model.mean - 40 * math.sqrt(model.variance)
    hi = hi if math.isfinite(hi) else model.mean + 40 * math.sqrt(model.variance)
    xs = np.linspace(lo, hi, num)
    us = np.maximum.accumulate(np.array([model.cdf(x) for x in xs]))
    us, idx = np.unique(us, return_index=True)
    return lambda u: np.interp(u, us, xs[idx])

"""Limit theory of the two statistics.

Under normality both statistics converge to the squared weighted L2 norm of
a centred Gaussian process. ``kernel(k, s, t)`` is that process's covariance
function, obtained as E[Z(s) Z(t)] for the one-observation processes
returned by :func:`null_process`. Under a fixed non-normal alternative
G/n - Delta is asymptotically normal with variance tau^2 / n; see
:func:`delta` and :func:`tau_squared`.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _scipy_integrate

from .errors import IllPosedRequestError, InvalidArgumentError
from .numerics import (
    DEFAULT_QUADRATURE,
    QuadratureConfig,
    _check_a,
    gauss_weight,
    integrate,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_ppf,
)
from .streams import RandomStream, as_generator
from .zerobias import DistributionModel, ZeroBiasLaw, _require_standardized, zero_bias_cdf

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KernelId:
    k: int

    def __post_init__(self):
        if self.k not in (1, 2):
            raise InvalidArgumentError(f"kernel index must be 1 or 2, got {self.k!r}")


def _kernel_index(k) -> int:
    return KernelId(k.k if isinstance(k, KernelId) else int(k)).k


@dataclass(frozen=True)
class FixedAlternativeSummary:
    delta: float
    tau_squared: float
    mc_replications: int = 0
    mc_std_error: float = 0.0

    def __post_init__(self):
        if self.delta < 0 or self.tau_squared < 0:
            raise InvalidArgumentError("delta and tau_squared must be nonnegative")

    @property
    def tau(self) -> float:
        return math.sqrt(self.tau_squared)


# Under N(0,1) both processes have the form A(s) + b0(s) + b1(s) X + b2(s) X^2
# with A(s) = X (X - s) 1{X <= s} (minus 1{X <= s} for the first statistic).

def _linear_coeffs(k: int, s):
    Phi, phi = std_normal_cdf(s), std_normal_pdf(s)
    if k == 2:
        return -0.5 * s * phi, s * Phi + 2.0 * phi, -Phi + 0.5 * s * phi
    return Phi, phi + s * Phi, -Phi


def _indicator_moments(k: int, u):
    """E[A(u)], E[A(u) X], E[A(u) X^2]."""
    Phi, phi = std_normal_cdf(u), std_normal_pdf(u)
    if k == 2:
        return Phi, -2.0 * phi - u * Phi, 3.0 * Phi - u * phi
    return np.zeros_like(Phi), -phi - u * Phi, 2.0 * Phi


def _cross(k: int, u, v):
    """E[A(u) (b0(v) + b1(v) X + b2(v) X^2)]."""
    e0, e1, e2 = _indicator_moments(k, u)
    b0, b1, b2 = _linear_coeffs(k, v)
    return b0 * e0 + b1 * e1 + b2 * e2


def kernel(k, s, t):
    """Covariance kernel of the Gaussian null limit of the k-th statistic.

    Vectorised over broadcastable ``s`` and ``t``. Symmetric in (s, t)
    exactly: only symmetric combinations of s and t are formed.
    """
    k = _kernel_index(k)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(t))):
        raise InvalidArgumentError("kernel arguments must be finite")
    m = np.minimum(s, t)
    Pm, pm = std_normal_cdf(m), std_normal_pdf(m)
    plus, prod = s + t, s * t
    # E[X^2 (X - s)(X - t); X <= m] from the truncated normal moments
    aa = (3.0 + prod) * Pm + (-(m ** 3 + 3.0 * m) + plus * (m * m + 2.0) - prod * m) * pm
    if k == 1:
        aa = aa - Pm + 2.0 * m * pm - plus * pm
    b0s, b1s, b2s = _linear_coeffs(k, s)
    b0t, b1t, b2t = _linear_coeffs(k, t)
    bb = b0s * b0t + (b0s * b2t + b2s * b0t) + b1s * b1t + 3.0 * (b2s * b2t)
    out = aa + (_cross(k, s, t) + _cross(k, t, s)) + bb
    return out[()] if out.ndim == 0 else out


def null_process(k, x, s) -> np.ndarray:
    """One-observation process under N(0,1): rows are draws ``x``, columns grid points ``s``.

    For k = 2 this is C2(s) of the fixed-alternative theory specialised to the
    normal law; for k = 1 it is C1(s) with d^X = p = phi.
    """
    k = _kernel_index(k)
    x = np.asarray(x, dtype=float).ravel()[:, None]
    s = np.asarray(s, dtype=float).ravel()[None, :]
    below = x <= s
    a = x * (x - s) * below
    if k == 1:
        a = a - below
    b0, b1, b2 = _linear_coeffs(k, s)
    return a + b0 + b1 * x + b2 * x * x


def _trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    if grid.size == 1:
        return np.ones(1)
    gaps = np.diff(grid)
    w = np.zeros(grid.size)
    w[:-1] += gaps / 2
    w[1:] += gaps / 2
    return w


def kernel_gram(k, grid, a: float = 1.0, quadrature_weights: bool = True) -> np.ndarray:
    """Discretisation of the integral operator with kernel K(s, t) omega_a(s) omega_a(t).

    Entry (i, j) is K(s_i, s_j) sqrt(w_i w_j omega_a(s_i) omega_a(s_j)) with
    trapezoid weights w (all ones when ``quadrature_weights`` is False). Its
    eigenvalues approximate those of the limit operator.
    """
    a = _check_a(a)
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise InvalidArgumentError("grid must be nonempty")
    if np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("grid points must be distinct and sorted ascending")
    w = gauss_weight(grid, a) * (_trapezoid_weights(grid) if quadrature_weights else 1.0)
    root = np.sqrt(w)
    K = kernel(k, grid[:, None], grid[None, :])
    return K * (root[:, None] * root[None, :])


def limit_eigenvalues(k, a: float = 1.0, num: int = 50, radius: float | None = None) -> np.ndarray:
    """Largest-first eigenvalues of the discretised limit operator (a diagnostic only)."""
    a = _check_a(a)
    radius = 6.0 * math.sqrt(a) + 2.0 if radius is None else float(radius)
    grid = np.linspace(-radius, radius, int(num))
    return np.linalg.eigvalsh(kernel_gram(k, grid, a))[::-1]


def _reference_cdf(model: DistributionModel, k: int):
    if k == 1:
        return model.cdf
    return lambda t: float(std_normal_cdf(t))


def delta(model: DistributionModel, k, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Population distance: weighted L2 norm of F^X - F (k = 1) or F^X - Phi (k = 2)."""
    k = _kernel_index(k)
    a = _check_a(a)
    _require_standardized(model)
    ref = _reference_cdf(model, k)

    def f(t):
        diff = zero_bias_cdf(model, t, cfg) - ref(t)
        return diff * diff * math.exp(-t * t / (2.0 * a)) / math.sqrt(2.0 * math.pi * a)

    return max(integrate(f, cfg=cfg, breakpoints=[0.0, *model.kinks()], scale=math.sqrt(a)), 0.0)


@dataclass(frozen=True)
class AlternativeTables:
    """F^X, d^X, F and p of a standardized model tabulated on a common grid."""

    grid: np.ndarray
    zb_cdf: np.ndarray
    zb_density: np.ndarray
    cdf: np.ndarray
    density: np.ndarray

    @classmethod
    def build(cls, model: DistributionModel, radius: float, step: float = 0.005,
              cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> "AlternativeTables":
        law = ZeroBiasLaw.build(model, radius=radius, step=step, cfg=cfg)
        g = law.grid
        F = np.array([model.cdf(v) for v in g])
        p = np.array([model.density(v) for v in g])
        # pad with the exact out-of-support values so the grid always spans [-radius, radius]
        lo, hi = g[0], g[-1]
        pads_lo = np.arange(-radius, lo, step)
        pads_hi = np.arange(hi + step, radius + step / 2, step)
        z = lambda q: np.zeros(q.size)
        o = lambda q: np.ones(q.size)
        grid = np.concatenate([pads_lo, g, pads_hi])
        return cls(
            grid=grid,
            zb_cdf=np.concatenate([z(pads_lo), law.cdf_table, o(pads_hi)]),
            zb_density=np.concatenate([z(pads_lo), law.density_table, z(pads_hi)]),
            cdf=np.concatenate([z(pads_lo), F, o(pads_hi)]),
            density=np.concatenate([z(pads_lo), p, z(pads_hi)]),
        )

    def partial_mean(self) -> np.ndarray:
        """E[(X - s) 1{X <= s}] = -d^X(s) - s F(s) on the grid."""
        return -self.zb_density - self.grid * self.cdf

    def discrepancy(self, k: int) -> np.ndarray:
        ref = self.cdf if k == 1 else std_normal_cdf(self.grid)
        return self.zb_cdf - ref

    def density_term(self, k: int) -> np.ndarray:
        return self.zb_density - self.density if k == 1 else self.zb_density

    def process(self, k: int, x, columns=None) -> np.ndarray:
        """C(x, s) for draws ``x`` (rows) at grid points (columns, optionally a subset)."""
        idx = slice(None) if columns is None else columns
        s = self.grid[idx][None, :]
        x = np.asarray(x, dtype=float).ravel()[:, None]
        below = x <= s
        out = (x * (x - s) * below - x * self.partial_mean()[idx] - x * x * self.zb_cdf[idx]
               - (0.5 * (1 - x * x) * s - x) * self.density_term(k)[idx])
        if k == 1:
            out = out - below + self.cdf[idx]
        return out


def _check_density_conditions(model: DistributionModel, tables: AlternativeTables, k: int):
    p, g = tables.density, tables.grid
    if not np.all(np.isfinite(p)) or np.max(np.abs(g * p)) > 50.0:
        warnings.warn(f"{model.name}: s * p(s) does not look bounded; the limit theorem may not apply",
                      RuntimeWarning, stacklevel=3)
    if k == 1:
        # on the fine grid a continuously differentiable density moves by tiny relative steps
        jump = np.max(np.abs(np.diff(p))) if np.all(np.isfinite(p)) else math.inf
        if not jump <= 0.02 * np.max(p):
            warnings.warn(f"{model.name}: density is not smooth (|p'| unbounded or jumps); "
                          "the limit theorem for the first statistic may not apply",
                          RuntimeWarning, stacklevel=3)


def tau_squared(model: DistributionModel, k, a: float, replications: int, stream,
                cfg: QuadratureConfig = DEFAULT_QUADRATURE, step: float = 0.005,
                block: int = 10_000) -> FixedAlternativeSummary:
    """Monte Carlo estimate of the asymptotic variance under a fixed alternative.

    tau^2 = 4 E[<C(X, .), g>^2] with g = F^X - F (k = 1) or F^X - Phi (k = 2)
    and the weighted L2 inner product. The inner product is linear in the
    indicator part of C, so it reduces to the tail integrals
    H_j(x) = int_x^inf s^j g(s) omega_a(s) ds, j = 0, 1, and five constants;
    all of them are tabulated once and each draw costs an interpolation.
    """
    k = _kernel_index(k)
    a = _check_a(a)
    _require_standardized(model)
    replications = int(replications)
    if replications < 2:
        raise InvalidArgumentError("tau_squared needs at least 2 replications")
    dist = delta(model, k, a, cfg)
    if dist <= 1e-10:
        raise IllPosedRequestError(
            f"{model.name}: distance to normality is zero, so tau^2 degenerates (normal model?)")
    radius = cfg.truncation_radius_multiplier * math.sqrt(a)
    tables = AlternativeTables.build(model, radius, step, cfg)
    _check_density_conditions(model, tables, k)
    s = tables.grid
    h = tables.discrepancy(k) * gauss_weight(s, a)

    def tail(v):
        # int_s^inf v ds on the grid
        c = _scipy_integrate.cumulative_trapezoid(v[::-1], -s[::-1], initial=0.0)
        return c[::-1]

    H0, H1 = tail(h), tail(s * h)
    D = tables.density_term(k)
    Im = np.trapezoid(tables.partial_mean() * h, s)
    IFX = np.trapezoid(tables.zb_cdf * h, s)
    IF = np.trapezoid(tables.cdf * h, s)
    IsD = np.trapezoid(s * D * h, s)
    ID = np.trapezoid(D * h, s)

    root = stream if isinstance(stream, RandomStream) else None
    gen = None if root is not None else as_generator(stream)
    squares = np.empty(replications)
    for b, start in enumerate(range(0, replications, block)):
        size = min(block, replications - start)
        rng = root.child(b).generator() if root is not None else gen
        x = model.draw(rng, size)
        h0 = np.interp(x, s, H0, left=H0[0], right=0.0)
        h1 = np.interp(x, s, H1, left=H1[0], right=0.0)
        inner = x * x * h0 - x * h1 - x * Im - x * x * IFX - 0.5 * (1 - x * x) * IsD + x * ID
        if k == 1:
            inner = inner - (h0 - IF)
        squares[start:start + size] = inner * inner
    tau2 = 4.0 * float(np.mean(squares))
    se = 4.0 * float(np.std(squares, ddof=1)) / math.sqrt(replications)
    log.debug("tau^2(%s, k=%d, a=%g) = %g +- %g", model.name, k, a, tau2, se)
    return FixedAlternativeSummary(dist, tau2, replications, se)


def tau_squared_double_integral(model: DistributionModel, k, a: float, replications: int, stream,
                                points: int = 50, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """tau^2 as 4 * double integral of the sampled covariance of C against g g omega omega.

    The covariance is estimated from ``replications`` draws on a ``points``
    grid and the double integral is a trapezoid rule; a cross-check for
    :func:`tau_squared`.
    """
    k = _kernel_index(k)
    a = _check_a(a)
    radius = cfg.truncation_radius_multiplier * math.sqrt(a)
    tables = AlternativeTables.build(model, radius, 0.005, cfg)
    lo = max(-6.0 * math.sqrt(a), tables.grid[0])
    hi = min(6.0 * math.sqrt(a), tables.grid[-1])
    cols = np.unique(np.searchsorted(tables.grid, np.linspace(lo, hi, points)).clip(0, tables.grid.size - 1))
    s = tables.grid[cols]
    x = model.draw(as_generator(stream), int(replications))
    C = tables.process(k, x, cols)
    cov = C.T @ C / C.shape[0]
    v = tables.discrepancy(k)[cols] * gauss_weight(s, a) * _trapezoid_weights(s)
    return 4.0 * float(v @ cov @ v)


def approximate_power(summary: FixedAlternativeSummary, critical_value: float, n: int) -> float:
    """First-order power 1 - Phi(sqrt(n) / tau * (c / n - Delta))."""
    if not summary.tau_squared > 0:
        raise InvalidArgumentError("approximate power needs tau^2 > 0")
    n = int(n)
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    z = math.sqrt(n) / summary.tau * (critical_value / n - summary.delta)
    return float(min(max(1.0 - std_normal_cdf(z), 0.0), 1.0))


def confidence_interval(g_over_n: float, summary: FixedAlternativeSummary, n: int,
                        alpha: float = 0.05) -> tuple[float, float]:
    """Asymptotic 1 - alpha interval G/n -+ q tau / sqrt(n), q = Phi^-1(1 - alpha / 2)."""
    if not summary.tau_squared > 0:
        raise InvalidArgumentError("confidence interval needs tau^2 > 0")
    if not 0 < alpha <= 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1], got {alpha!r}")
    n = int(n)
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    q = float(std_normal_ppf(1.0 - alpha / 2.0))
    half = q * summary.tau / math.sqrt(n)
    return (g_over_n - half, g_over_n + half)

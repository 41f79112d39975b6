"""Special functions and quadrature used throughout the package.

Everything the statistics need from the standard normal law lives here:
density derivatives, the distribution function, the Gaussian weight
``omega_a`` and the two weight integrals that show up in the closed form
of the second statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import integrate as _scipy_integrate
from scipy import special

from .errors import InvalidArgumentError, QuadratureError

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    truncation_radius_multiplier: float = 10.0
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidArgumentError("quadrature tolerances must be strictly positive")
        if self.truncation_radius_multiplier <= 0:
            raise InvalidArgumentError("truncation_radius_multiplier must be positive")
        if int(self.max_subdivisions) < 1:
            raise InvalidArgumentError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureConfig()


def _check_a(a: float) -> float:
    a = float(a)
    if not a > 0 or not math.isfinite(a):
        raise InvalidArgumentError(f"tuning parameter a must be a positive finite number, got {a!r}")
    return a


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_2PI


def std_normal_pdf_deriv(x, order: int = 0):
    """Derivative of order 0..3 of the standard normal density."""
    if order not in (0, 1, 2, 3):
        raise InvalidArgumentError(f"derivative order must be 0, 1, 2 or 3, got {order!r}")
    x = np.asarray(x, dtype=float)
    p = std_normal_pdf(x)
    if order == 0:
        out = p
    elif order == 1:
        out = -x * p
    elif order == 2:
        out = (x * x - 1.0) * p
    else:
        out = (3.0 * x - x ** 3) * p
    return out[()] if out.ndim == 0 else out


def std_normal_cdf(x):
    """Standard normal distribution function, computed from erfc."""
    x = np.asarray(x, dtype=float)
    if np.isnan(x).any():
        raise InvalidArgumentError("std_normal_cdf received NaN")
    out = special.ndtr(x)
    return out[()] if out.ndim == 0 else out


def std_normal_ppf(q):
    return special.ndtri(q)


def gauss_weight(t, a: float):
    """The weight omega_a: centred normal density with variance ``a``."""
    a = _check_a(a)
    t = np.asarray(t, dtype=float)
    out = np.exp(-t * t / (2.0 * a)) / math.sqrt(2.0 * math.pi * a)
    return out[()] if out.ndim == 0 else out


def _segments(lower: float, upper: float, breakpoints: Iterable[float]):
    inner = sorted({float(b) for b in breakpoints if lower < b < upper and math.isfinite(b)})
    edges = [lower, *inner, upper]
    return list(zip(edges[:-1], edges[1:]))


def integrate_with_error(
    f: Callable[[float], float],
    lower: float = -math.inf,
    upper: float = math.inf,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    *,
    breakpoints: Iterable[float] = (),
    scale: float | None = None,
) -> tuple[float, float]:
    """Adaptive quadrature of a scalar ``f`` over ``[lower, upper]``.

    ``breakpoints`` are kinks of the integrand; each piece between them is
    integrated separately. When ``scale`` is given the integrand is taken to
    carry a Gaussian factor of that standard deviation, infinite ends are
    truncated at ``multiplier * scale + max|breakpoint|`` and a tail estimate
    is added to the returned error. Without ``scale`` infinite ends are left
    to the underlying routine's variable transformation.
    """
    breakpoints = [float(b) for b in breakpoints]
    lo, hi = float(lower), float(upper)
    if lo > hi:
        value, err = integrate_with_error(f, hi, lo, cfg, breakpoints=breakpoints, scale=scale)
        return -value, err
    if lo == hi:
        return 0.0, 0.0

    tail_err = 0.0
    if scale is not None:
        if not scale > 0:
            raise InvalidArgumentError("scale must be positive")
        anchors = [abs(b) for b in breakpoints if math.isfinite(b)]
        anchors += [abs(x) for x in (lo, hi) if math.isfinite(x)]
        radius = cfg.truncation_radius_multiplier * scale + (max(anchors) if anchors else 0.0)
        if math.isinf(lo):
            lo = -radius
            tail_err += abs(f(lo)) * scale * scale / max(radius, scale)
        if math.isinf(hi):
            hi = radius if radius > lo else lo + cfg.truncation_radius_multiplier * scale
            tail_err += abs(f(hi)) * scale * scale / max(abs(hi), scale)
        if lo >= hi:
            return 0.0, tail_err

    pieces = _segments(lo, hi, breakpoints)
    eps_abs = cfg.abs_tol / len(pieces)
    total, total_err, trouble = 0.0, tail_err, []
    for a, b in pieces:
        value, err, info, *rest = _scipy_integrate.quad(
            f, a, b, epsabs=eps_abs, epsrel=cfg.rel_tol,
            limit=int(cfg.max_subdivisions), full_output=1,
        )
        ier = 0 if len(rest) == 0 else 1
        total += value
        total_err += err
        if ier:
            trouble.append((a, b, rest[0]))
    if trouble and total_err > cfg.abs_tol + cfg.rel_tol * abs(total):
        a, b, msg = trouble[0]
        raise QuadratureError(f"quadrature failed on [{a}, {b}]: {msg.splitlines()[0]}", total, total_err)
    return total, total_err


def integrate(f, lower=-math.inf, upper=math.inf, cfg=DEFAULT_QUADRATURE, *, breakpoints=(), scale=None) -> float:
    """Like :func:`integrate_with_error` but returns only the value."""
    return integrate_with_error(f, lower, upper, cfg, breakpoints=breakpoints, scale=scale)[0]


def phi_sq_weight_integral(a: float) -> float:
    """Integral of Phi(t)^2 * omega_a(t) over the real line.

    Equals the orthant probability of a bivariate normal with correlation
    a / (1 + a).
    """
    a = _check_a(a)
    return 0.25 + math.asin(a / (1.0 + a)) / (2.0 * math.pi)


def upper_phi_weight_integral(y: float, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Integral of Phi(t) * omega_a(t) over ``[y, inf)`` by quadrature."""
    a = _check_a(a)
    y = float(y)
    if math.isnan(y):
        raise InvalidArgumentError("y must not be NaN")
    if y == math.inf:
        return 0.0
    sd = math.sqrt(a)
    f = lambda t: float(special.ndtr(t)) * math.exp(-t * t / (2.0 * a)) / (SQRT_2PI * sd)
    value = integrate(f, y, math.inf, cfg, scale=sd)
    return min(max(value, 0.0), 1.0)


def upper_phi_weight_integral_owen(y, a: float):
    """Vectorised exact form of :func:`upper_phi_weight_integral`.

    With h = y / sqrt(a) the integral equals (1 - Phi(h)) / 2 + T(h, sqrt(a)),
    T being Owen's T function.
    """
    a = _check_a(a)
    h = np.asarray(y, dtype=float) / math.sqrt(a)
    out = 0.5 * special.ndtr(-h) + special.owens_t(h, math.sqrt(a))
    return out[()] if out.ndim == 0 else out

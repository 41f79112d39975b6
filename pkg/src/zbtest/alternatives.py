"""Catalog of distributions used in the power study.

Names follow a compact syntax, e.g. ``normal(0,1)``, ``mixn(0.3,1,0.25)``,
``t(3)``, ``uniform``, ``chisq(5)``, ``beta(1,4)``, ``gamma(1,5)``,
``gumbel(1,2)``, ``lognormal(0,1)``, ``weibull(1,0.5)``.

Conventions: ``gamma(shape, scale)``, ``weibull(scale, shape)``,
``gumbel(location, scale)`` (maximum-type), ``mixn(p, mu, sigma2)`` draws
N(0,1) with probability 1-p and N(mu, sigma2) with probability p.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import InvalidArgumentError
from .streams import RandomStream, as_generator
from .zerobias import DistributionModel, standardize

SQRT3 = math.sqrt(3.0)

# family -> number of parameters, default parameters
FAMILIES = {
    "normal": (2, (0.0, 1.0)),
    "mixn": (3, None),
    "t": (1, None),
    "uniform": (0, ()),
    "chisq": (1, None),
    "beta": (2, None),
    "gamma": (2, None),
    "gumbel": (2, (1.0, 2.0)),
    "lognormal": (2, (0.0, 1.0)),
    "weibull": (2, (1.0, 0.5)),
}

CATALOG = (
    "normal(0,1)", "mixn(0.3,1,0.25)", "mixn(0.5,1,4)", "t(3)", "t(5)", "t(10)", "uniform",
    "chisq(5)", "chisq(15)", "beta(1,4)", "beta(2,5)", "gamma(1,5)", "gamma(5,1)",
    "gumbel(1,2)", "lognormal(0,1)", "weibull(1,0.5)",
)


def _fmt(v: float) -> str:
    return repr(int(v)) if float(v).is_integer() else repr(float(v))


@dataclass(frozen=True)
class AlternativeSpec:
    family: str
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgumentError(f"unknown distribution {self.family!r}; catalog: {', '.join(CATALOG)}")
        arity, _ = FAMILIES[self.family]
        if len(self.params) != arity:
            raise InvalidArgumentError(f"{self.family} takes {arity} parameter(s), got {len(self.params)}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        _validate(self)

    @property
    def name(self) -> str:
        if self.family == "uniform":
            return "uniform"
        return f"{self.family}({','.join(_fmt(p) for p in self.params)})"

    def __str__(self):
        return self.name


def _validate(spec: AlternativeSpec):
    f, p = spec.family, spec.params
    ok = True
    if f == "normal":
        ok = p[1] > 0
    elif f == "mixn":
        ok = 0 < p[0] < 1 and p[2] > 0
    elif f == "t":
        ok = p[0] > 2  # finite variance is required downstream
    elif f == "chisq":
        ok = p[0] > 0
    elif f in ("beta", "gamma", "weibull"):
        ok = p[0] > 0 and p[1] > 0
    elif f in ("gumbel", "lognormal"):
        ok = p[1] > 0
    if not ok:
        raise InvalidArgumentError(f"parameters out of range for {f}: {p}")


_NAME = re.compile(r"^\s*([a-z]+)\s*(?:\((.*)\))?\s*$")


def parse_spec(text: str) -> AlternativeSpec:
    m = _NAME.match(text.strip().lower())
    if not m:
        raise InvalidArgumentError(f"cannot parse distribution {text!r}; catalog: {', '.join(CATALOG)}")
    family, args = m.group(1), m.group(2)
    if family not in FAMILIES:
        raise InvalidArgumentError(f"unknown distribution {family!r}; catalog: {', '.join(CATALOG)}")
    if args is None or not args.strip():
        default = FAMILIES[family][1]
        if default is None:
            raise InvalidArgumentError(f"{family} needs parameters, e.g. one of {[c for c in CATALOG if c.startswith(family)]}")
        params = default
    else:
        try:
            params = tuple(float(a) for a in args.split(","))
        except ValueError as exc:
            raise InvalidArgumentError(f"bad parameters in {text!r}") from exc
    return AlternativeSpec(family, params)


def format_spec(spec: AlternativeSpec) -> str:
    return spec.name


def _scipy_dist(spec: AlternativeSpec):
    f, p = spec.family, spec.params
    if f == "normal":
        return stats.norm(p[0], math.sqrt(p[1]))
    if f == "t":
        return stats.t(p[0])
    if f == "uniform":
        return stats.uniform(-SQRT3, 2 * SQRT3)
    if f == "chisq":
        return stats.chi2(p[0])
    if f == "beta":
        return stats.beta(p[0], p[1])
    if f == "gamma":
        return stats.gamma(p[0], scale=p[1])
    if f == "gumbel":
        return stats.gumbel_r(loc=p[0], scale=p[1])
    if f == "lognormal":
        return stats.lognorm(p[1], scale=math.exp(p[0]))
    if f == "weibull":
        return stats.weibull_min(p[1], scale=p[0])
    return None


def sample(spec: AlternativeSpec, size, stream: RandomStream | np.random.Generator) -> np.ndarray:
    """Draw ``size`` (int or shape) independent variates from ``spec``."""
    rng = as_generator(stream)
    f, p = spec.family, spec.params
    if f == "normal":
        return p[0] + math.sqrt(p[1]) * rng.standard_normal(size)
    if f == "mixn":
        z = rng.standard_normal(size)
        second = rng.random(size) < p[0]
        return np.where(second, p[1] + math.sqrt(p[2]) * z, z)
    if f == "t":
        z = rng.standard_normal(size)
        return z / np.sqrt(rng.chisquare(p[0], size) / p[0])
    if f == "uniform":
        return rng.uniform(-SQRT3, SQRT3, size)
    if f == "chisq":
        return rng.chisquare(p[0], size)
    if f == "beta":
        return rng.beta(p[0], p[1], size)
    if f == "gamma":
        return rng.gamma(p[0], p[1], size)
    if f == "gumbel":
        return rng.gumbel(p[0], p[1], size)
    if f == "lognormal":
        return rng.lognormal(p[0], p[1], size)
    if f == "weibull":
        return p[0] * rng.weibull(p[1], size)
    raise AssertionError(f)


def moments(spec: AlternativeSpec) -> tuple[float, float]:
    """Exact (mean, variance)."""
    f, p = spec.family, spec.params
    if f == "normal":
        return p[0], p[1]
    if f == "mixn":
        w, mu, s2 = p
        mean = w * mu
        second = (1 - w) * 1.0 + w * (s2 + mu * mu)
        return mean, second - mean * mean
    if f == "t":
        return 0.0, p[0] / (p[0] - 2.0)
    if f == "uniform":
        return 0.0, 1.0
    if f == "chisq":
        return p[0], 2.0 * p[0]
    if f == "beta":
        a, b = p
        return a / (a + b), a * b / ((a + b) ** 2 * (a + b + 1.0))
    if f == "gamma":
        k, theta = p
        return k * theta, k * theta * theta
    if f == "gumbel":
        loc, scale = p
        return loc + scale * np.euler_gamma, (math.pi * scale) ** 2 / 6.0
    if f == "lognormal":
        mu, s = p
        return math.exp(mu + s * s / 2.0), (math.exp(s * s) - 1.0) * math.exp(2.0 * mu + s * s)
    if f == "weibull":
        lam, k = p
        m1 = lam * special.gamma(1.0 + 1.0 / k)
        m2 = lam * lam * special.gamma(1.0 + 2.0 / k)
        return float(m1), float(m2 - m1 * m1)
    raise AssertionError(f)


def _log_norm_const(spec: AlternativeSpec) -> float:
    f, p = spec.family, spec.params
    if f == "t":
        nu = p[0]
        return math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2) - 0.5 * math.log(nu * math.pi)
    if f == "chisq":
        k = p[0] / 2
        return -(k * math.log(2.0) + math.lgamma(k))
    if f == "beta":
        return -float(special.betaln(p[0], p[1]))
    if f == "gamma":
        return -(math.lgamma(p[0]) + p[0] * math.log(p[1]))
    return 0.0


def density(spec: AlternativeSpec, x):
    f, p = spec.family, spec.params
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if f == "normal":
            sd = math.sqrt(p[1])
            out = np.exp(-0.5 * ((x - p[0]) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        elif f == "mixn":
            w, mu, s2 = p
            sd = math.sqrt(s2)
            out = ((1 - w) * np.exp(-0.5 * x * x) + w * np.exp(-0.5 * ((x - mu) / sd) ** 2) / sd) / math.sqrt(2 * math.pi)
        elif f == "t":
            nu = p[0]
            out = np.exp(_log_norm_const(spec) - (nu + 1) / 2 * np.log1p(x * x / nu))
        elif f == "uniform":
            out = np.where(np.abs(x) <= SQRT3, 1.0 / (2 * SQRT3), 0.0)
        elif f == "chisq":
            k = p[0] / 2
            out = np.where(x > 0, np.exp(_log_norm_const(spec) + (k - 1) * np.log(x) - x / 2), 0.0)
        elif f == "beta":
            a, b = p
            inside = (x > 0) & (x < 1)
            out = np.where(inside, np.exp(_log_norm_const(spec) + (a - 1) * np.log(x) + (b - 1) * np.log1p(-x)), 0.0)
        elif f == "gamma":
            k, theta = p
            out = np.where(x > 0, np.exp(_log_norm_const(spec) + (k - 1) * np.log(x) - x / theta), 0.0)
        elif f == "gumbel":
            z = (x - p[0]) / p[1]
            out = np.exp(-z - np.exp(-z)) / p[1]
        elif f == "lognormal":
            mu, sg = p
            out = np.where(x > 0, np.exp(-0.5 * ((np.log(x) - mu) / sg) ** 2) / (x * sg * math.sqrt(2 * math.pi)), 0.0)
        elif f == "weibull":
            lam, k = p
            z = x / lam
            out = np.where(x > 0, k / lam * z ** (k - 1) * np.exp(-z ** k), 0.0)
        else:
            raise AssertionError(f)
    return out[()] if out.ndim == 0 else out


def cdf(spec: AlternativeSpec, x):
    f, p = spec.family, spec.params
    x = np.asarray(x, dtype=float)
    pos = np.maximum(x, 0.0)
    if f == "normal":
        out = special.ndtr((x - p[0]) / math.sqrt(p[1]))
    elif f == "mixn":
        w, mu, s2 = p
        out = (1 - w) * special.ndtr(x) + w * special.ndtr((x - mu) / math.sqrt(s2))
    elif f == "t":
        out = special.stdtr(p[0], x)
    elif f == "uniform":
        out = np.clip((x + SQRT3) / (2 * SQRT3), 0.0, 1.0)
    elif f == "chisq":
        out = special.gammainc(p[0] / 2, pos / 2)
    elif f == "beta":
        out = special.betainc(p[0], p[1], np.clip(x, 0.0, 1.0))
    elif f == "gamma":
        out = special.gammainc(p[0], pos / p[1])
    elif f == "gumbel":
        out = np.exp(-np.exp(-(x - p[0]) / p[1]))
    elif f == "lognormal":
        with np.errstate(divide="ignore"):
            out = np.where(x > 0, special.ndtr((np.log(pos) - p[0]) / p[1]), 0.0)
    elif f == "weibull":
        out = -np.expm1(-(pos / p[0]) ** p[1])
    else:
        raise AssertionError(f)
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def scipy_reference(spec: AlternativeSpec):
    """The matching frozen scipy.stats distribution (None for mixtures); for cross-checks."""
    return _scipy_dist(spec)


def support(spec: AlternativeSpec) -> tuple[float, float]:
    f = spec.family
    if f == "uniform":
        return -SQRT3, SQRT3
    if f == "beta":
        return 0.0, 1.0
    if f in ("chisq", "gamma", "lognormal", "weibull"):
        return 0.0, math.inf
    return -math.inf, math.inf


def to_model(spec: AlternativeSpec, standardized: bool = True) -> DistributionModel:
    mean, var = moments(spec)
    model = DistributionModel(
        density=lambda x: float(density(spec, x)),
        cdf=lambda x: float(cdf(spec, x)),
        support=support(spec),
        mean=mean,
        variance=var,
        name=spec.name,
        sampler=lambda rng, size: sample(spec, size, rng),
    )
    return standardize(model) if standardized else model

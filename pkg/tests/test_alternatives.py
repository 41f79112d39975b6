import math

import numpy as np
import pytest
from scipy import integrate

from zbtest.alternatives import (
    CATALOG,
    AlternativeSpec,
    cdf,
    density,
    format_spec,
    moments,
    parse_spec,
    sample,
    scipy_reference,
    support,
    to_model,
)
from zbtest.errors import InvalidArgumentError
from zbtest.streams import RandomStream

SQRT3 = math.sqrt(3.0)
SPECS = [parse_spec(c) for c in CATALOG]


def _quad_moment(spec, k):
    lo, hi = support(spec)
    f = lambda x: x ** k * float(density(spec, x))
    pts = [lo, hi] if math.isfinite(lo) and math.isfinite(hi) else None
    if math.isfinite(lo) and math.isfinite(hi):
        return integrate.quad(f, lo, hi, epsabs=1e-12, epsrel=1e-12, limit=400)[0]
    mean, var = moments(spec)
    mid = mean if math.isfinite(mean) else 0.0
    left = integrate.quad(f, lo, mid, epsabs=1e-12, epsrel=1e-12, limit=400)[0]
    right = integrate.quad(f, mid, hi, epsabs=1e-12, epsrel=1e-12, limit=400)[0]
    return left + right


@pytest.mark.parametrize("spec", SPECS, ids=CATALOG)
def test_moments_match_density(spec):
    mean, var = moments(spec)
    assert _quad_moment(spec, 0) == pytest.approx(1.0, abs=1e-8)
    assert _quad_moment(spec, 1) == pytest.approx(mean, abs=1e-7)
    assert _quad_moment(spec, 2) - mean ** 2 == pytest.approx(var, abs=1e-7 * max(1.0, var))


@pytest.mark.parametrize("spec", SPECS, ids=CATALOG)
def test_cdf_differentiates_to_density(spec):
    mean, var = moments(spec)
    sd = math.sqrt(var)
    lo, hi = support(spec)
    probes = [mean + sd * z for z in (-1.3, -0.4, 0.2, 0.9, 1.7)]
    probes = [p for p in probes if lo + 1e-3 < p < hi - 1e-3]
    h = 1e-6 * sd
    for p in probes:
        fd = (float(cdf(spec, p + h)) - float(cdf(spec, p - h))) / (2 * h)
        assert fd == pytest.approx(float(density(spec, p)), abs=1e-6 * max(1.0, float(density(spec, p))))


@pytest.mark.parametrize("spec", [s for s in SPECS if s.family != "mixn"], ids=[c for c in CATALOG if "mixn" not in c])
def test_density_and_cdf_agree_with_scipy(spec):
    ref = scipy_reference(spec)
    x = ref.ppf(np.linspace(0.01, 0.99, 25))
    assert np.allclose(density(spec, x), ref.pdf(x), rtol=1e-10, atol=1e-14)
    assert np.allclose(cdf(spec, x), ref.cdf(x), rtol=1e-10, atol=1e-14)
    assert ref.mean() == pytest.approx(moments(spec)[0], rel=1e-10, abs=1e-12)
    assert ref.var() == pytest.approx(moments(spec)[1], rel=1e-10)


@pytest.mark.parametrize("spec", SPECS, ids=CATALOG)
def test_sampler_matches_cdf(spec):
    x = np.sort(sample(spec, 100_000, RandomStream(99, (1,))))
    emp_hi = np.arange(1, x.size + 1) / x.size
    emp_lo = np.arange(0, x.size) / x.size
    F = cdf(spec, x)
    assert max(np.max(emp_hi - F), np.max(F - emp_lo)) < 0.01


def test_catalog_examples():
    u = parse_spec("uniform")
    assert moments(u) == (0.0, 1.0)
    assert float(density(u, 0.3)) == pytest.approx(1 / (2 * SQRT3))
    x = sample(u, 10_000, RandomStream(1))
    assert x.min() >= -SQRT3 and x.max() <= SQRT3
    mean, var = moments(parse_spec("weibull(1,0.5)"))
    assert (mean, var) == (pytest.approx(2.0), pytest.approx(20.0))
    mean, var = moments(parse_spec("lognormal(0,1)"))
    assert mean == pytest.approx(math.exp(0.5)) and var == pytest.approx((math.e - 1) * math.e)
    assert float(cdf(parse_spec("gumbel(1,2)"), 1.0)) == pytest.approx(math.exp(-1.0))
    b = parse_spec("beta(1,4)")
    for t in (0.1, 0.5, 0.9):
        assert float(cdf(b, t)) == pytest.approx(1 - (1 - t) ** 4, abs=1e-14)


def test_mixture_component_fraction():
    spec = parse_spec("mixn(0.3,1,0.25)")
    rng = RandomStream(5).generator()
    z_state = rng.bit_generator.state
    draws = sample(spec, 100_000, rng)
    # replay the generator to recover the component indicators
    rng.bit_generator.state = z_state
    rng.standard_normal(100_000)
    indicators = rng.random(100_000) < 0.3
    assert indicators.mean() == pytest.approx(0.3, abs=0.01)
    assert draws[indicators].mean() == pytest.approx(1.0, abs=0.02)
    assert draws[~indicators].std() == pytest.approx(1.0, abs=0.02)


def test_chisq_sample_mean():
    assert sample(parse_spec("chisq(5)"), 100_000, RandomStream(3)).mean() == pytest.approx(5.0, abs=0.05)


def test_sampling_deterministic():
    s = parse_spec("t(3)")
    assert np.array_equal(sample(s, 50, RandomStream(7, (2, 3))), sample(s, 50, RandomStream(7, (2, 3))))
    assert not np.array_equal(sample(s, 50, RandomStream(7, (2, 3))), sample(s, 50, RandomStream(7, (2, 4))))


@pytest.mark.parametrize("text", CATALOG)
def test_parse_format_round_trip(text):
    assert format_spec(parse_spec(text)) == text


def test_parse_defaults_and_spacing():
    assert parse_spec(" Gumbel ").params == (1.0, 2.0)
    assert parse_spec("lognormal").name == "lognormal(0,1)"
    assert parse_spec("gamma( 1 , 5 )").name == "gamma(1,5)"
    assert parse_spec("normal(0,1e0)").name == "normal(0,1)"


@pytest.mark.parametrize("bad", ["cauchy", "t(1)", "beta(1)", "normal(0,-1)", "chisq", "mixn(2,1,1)", "t(x)"])
def test_bad_specs(bad):
    with pytest.raises(InvalidArgumentError) as info:
        parse_spec(bad)
    if bad == "cauchy":
        assert "normal(0,1)" in str(info.value)


def test_standardized_model():
    m = to_model(parse_spec("gamma(5,1)"))
    assert m.is_standardized
    assert m.expect(lambda x: x * x) == pytest.approx(1.0, abs=1e-8)
    draws = m.draw(RandomStream(4).generator(), 50_000)
    assert draws.mean() == pytest.approx(0.0, abs=0.03)
    assert draws.var() == pytest.approx(1.0, abs=0.03)


def test_spec_is_hashable_value():
    assert AlternativeSpec("t", (3,)) == parse_spec("t(3)")
    assert len({parse_spec("t(3)"), AlternativeSpec("t", (3.0,))}) == 1

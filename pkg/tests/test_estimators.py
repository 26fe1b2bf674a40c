import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import enumerate_probability, gaussian_ratio_prob
from relanticonc import distributions as dist
from relanticonc.errors import CapabilityError, DomainError, SizeError
from relanticonc.estimators import (
    concentration_fn,
    estimate,
    exact_probability,
    gaussian_probability,
    linear_form_samples,
    mc_probability,
    tail_prob,
    wilson_interval,
)

RAD = dist.rademacher()
THREE = dist.finite_discrete([(-1, 0.25), (0, 0.5), (1, 0.25)])


def test_exact_examples():
    assert exact_probability((1, 1), (1, -1), RAD).value == pytest.approx(0.5)
    assert exact_probability((2, 1), (1, 1), RAD).value == 0
    assert exact_probability((1, 0), (0, 1), RAD).value == 1
    e = exact_probability((1, 1), (1, -1), RAD)
    assert e.ci_lo == e.ci_hi == e.value and e.method == "exact" and e.seed is None


def test_exact_size_error_suggests_mc():
    with pytest.raises(SizeError, match="mc"):
        exact_probability(np.ones(30), np.ones(30), RAD)


def test_exact_needs_finite_support():
    with pytest.raises(CapabilityError):
        exact_probability((1, 1), (1, 0), dist.gaussian())


vec = st.lists(st.integers(-3, 3), min_size=1, max_size=6)


@given(vec, vec, st.sampled_from([RAD, THREE]))
def test_exact_matches_plain_enumeration(a, b, spec):
    n = min(len(a), len(b))
    a, b = np.array(a[:n], float), np.array(b[:n], float)
    v, q = spec.support()
    assert exact_probability(a, b, spec).value == pytest.approx(enumerate_probability(a, b, v, q), abs=1e-12)


@given(vec, vec, st.floats(0.1, 10))
def test_scale_invariance_and_complement(a, b, c):
    n = min(len(a), len(b))
    a, b = np.array(a[:n], float), np.array(b[:n], float)
    p = exact_probability(a, b, RAD).value
    assert exact_probability(c * a, c * b, RAD).value == pytest.approx(p, abs=1e-12)
    strict = exact_probability(b, a, RAD, strict=True).value
    assert p + strict == pytest.approx(1.0, abs=1e-12)


def test_mc_examples():
    assert mc_probability((1, 2), (1, 2), dist.gaussian(), n_samples=1000, seed=0).value == 1
    e = mc_probability((1, 1), (1, -1), RAD, n_samples=10**5, seed=4)
    assert e.ci_lo <= 0.5 <= e.ci_hi
    assert e.ci_lo <= e.value <= e.ci_hi


def test_mc_gaussian_closed_form():
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 0.1, 0.0])
    p = gaussian_ratio_prob(0.1)
    assert p == pytest.approx(0.06345, abs=1e-5)
    assert gaussian_probability(a, b) == pytest.approx(p, rel=1e-12)
    e = mc_probability(a, b, dist.gaussian(), n_samples=10**6, seed=9)
    assert abs(e.value - p) <= 4 * math.sqrt(p * (1 - p) / 1e6)


def test_mc_determinism_and_workers():
    kw = dict(n_samples=300_000, seed=11)
    a, b = np.ones(5), np.linspace(0, 1, 5)
    e1 = mc_probability(a, b, dist.laplace(1.0), **kw)
    e2 = mc_probability(a, b, dist.laplace(1.0), workers=4, **kw)
    assert e1 == e2


def test_mc_errors():
    with pytest.raises(DomainError):
        mc_probability((1,), (1,), RAD, n_samples=10)
    with pytest.raises(DomainError):
        mc_probability((1, 2), (1,), RAD)


def test_ci_coverage():
    a, b = (3.0, 1.0, 1.0, 2.0), (1.0, -1.0, 0.5, 0.0)
    exact = exact_probability(a, b, RAD).value
    hits = sum(
        (lambda e: e.ci_lo <= exact <= e.ci_hi)(mc_probability(a, b, RAD, n_samples=2000, seed=s, ci_level=0.99))
        for s in range(200)
    )
    assert hits >= 190


def test_wilson_properties():
    lo, hi = wilson_interval(0, 100, 0.99)
    assert lo == 0 and 0 < hi < 0.1
    lo, hi = wilson_interval(100, 100, 0.99)
    assert hi == 1 and lo > 0.9


def test_estimate_auto_dispatch():
    assert estimate((1, 1), (1, -1), RAD).method == "exact"
    assert estimate((1, 1), (1, -1), dist.gaussian(), n_samples=1000, seed=0).method == "monte-carlo"
    assert estimate(np.ones(30), np.ones(30), RAD, n_samples=1000, seed=0).method == "monte-carlo"


def test_concentration_examples():
    assert concentration_fn([1, 2, 3], 1) == pytest.approx(2 / 3)
    assert concentration_fn([1, 2, 3], 0) == pytest.approx(1 / 3)
    s = linear_form_samples(np.ones(4), RAD, 10**5, seed=3)
    assert concentration_fn(s, 0) == pytest.approx(6 / 16, abs=0.01)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30), st.floats(0, 5), st.floats(0, 5))
def test_concentration_monotone(x, t1, dt):
    q1, q2 = concentration_fn(x, t1), concentration_fn(x, t1 + dt)
    assert q1 <= q2 <= 1


def test_tail_examples():
    assert tail_prob([-2, 0, 3], 1) == pytest.approx(2 / 3)
    assert tail_prob([-2, 0, 3], -1) == 1
    x = dist.sample(dist.gaussian(), 10**6, seed=5)
    assert tail_prob(x, 2) == pytest.approx(0.0455, abs=0.001)

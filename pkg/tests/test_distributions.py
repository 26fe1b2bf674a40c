import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from relanticonc import distributions as dist
from relanticonc.errors import CapabilityError, ConfigError, ShapeError

LAWS = [
    dist.gaussian(1.0),
    dist.gaussian(0.5),
    dist.laplace(1 / math.sqrt(2)),
    dist.uniform(-1.0, 1.0),
    dist.exponential_power(1.5),
    dist.exponential_power(3.0, 0.7),
]


def test_sample_support_and_determinism():
    x = dist.sample(dist.rademacher(), 4, seed=7)
    assert set(np.unique(x)) <= {-1.0, 1.0} and x.size == 4
    np.testing.assert_array_equal(x, dist.sample(dist.rademacher(), 4, seed=7))
    np.testing.assert_array_equal(dist.sample(dist.point_mass(0.0), 3, seed=1), np.zeros(3))


def test_gaussian_sample_mean():
    x = dist.sample(dist.gaussian(1.0), 10**6, seed=1)
    assert abs(x.mean()) < 4 / 1000


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0, 2.5])
def test_rademacher_cf_is_cosine(lam):
    assert abs(complex(dist.cf(dist.rademacher(), lam)) - math.cos(lam)) < 1e-15


def test_mgf_values():
    assert float(dist.mgf(dist.rademacher(), 1.0)) == pytest.approx(math.cosh(1.0), rel=1e-14)
    assert float(dist.mgf(dist.gaussian(1.0), 0.5)) == pytest.approx(math.exp(0.125), rel=1e-12)


def test_mgf_divergence_is_capability_error():
    with pytest.raises(CapabilityError):
        dist.mgf(dist.laplace(1.0), 1.5)


@pytest.mark.parametrize("spec", LAWS, ids=lambda s: s.describe())
def test_density_integrates_to_one(spec):
    lo, hi = -dist.effective_range(spec), dist.effective_range(spec)
    val = integrate.quad(lambda x: float(dist.density(spec, x)), lo, hi, points=[0.0], limit=400)[0]
    assert abs(val - 1) < 1e-6


@pytest.mark.parametrize("spec", LAWS + [dist.rademacher()], ids=lambda s: s.describe())
def test_cf_normalized_and_bounded(spec):
    assert complex(dist.cf(spec, 0.0)) == 1
    lam = np.linspace(-20, 20, 81)
    assert np.all(np.abs(dist.cf(spec, lam)) <= 1 + 1e-12)


@pytest.mark.parametrize("spec", [dist.rademacher(), dist.gaussian(1.0), dist.laplace(1.0), dist.uniform(-1, 1)], ids=lambda s: s.describe())
def test_symmetrized_difference_cf(spec):
    lam = np.linspace(-6, 6, 49)
    d = dist.symmetrized_difference(spec)
    np.testing.assert_allclose(np.real(dist.cf(d, lam)), np.abs(dist.cf(spec, lam)) ** 2, atol=1e-9)


def test_symmetrized_difference_examples():
    v, q = dist.symmetrized_difference(dist.rademacher()).support()
    np.testing.assert_allclose(v, [-2, 0, 2])
    np.testing.assert_allclose(q, [0.25, 0.5, 0.25])
    v, q = dist.symmetrized_difference(dist.point_mass(3.0)).support()
    np.testing.assert_allclose(v, [0.0])
    assert dist.symmetrized_difference(dist.gaussian(1.0)) == dist.gaussian(math.sqrt(2))


def test_tilt_rademacher():
    t = dist.tilt(dist.rademacher(), 0.5)
    v, q = t.law.support()
    assert q[v == 1][0] == pytest.approx(math.exp(0.5) / (2 * math.cosh(0.5)), rel=1e-14)
    assert q[v == 1][0] == pytest.approx(0.7311, abs=1e-4)
    assert t.normalizer == pytest.approx(math.cosh(0.5), rel=1e-14)


def test_tilt_zero_is_identity():
    t = dist.tilt(dist.laplace(1.0), 0.0)
    assert t.normalizer == 1.0
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(t.density(x), dist.density(dist.laplace(1.0), x))


@pytest.mark.parametrize("spec,t", [(dist.gaussian(1.0), 0.7), (dist.laplace(1.0), 0.4), (dist.uniform(-1, 1), 1.3), (dist.exponential_power(1.5), 0.5)])
def test_tilt_roundtrip_and_normalizer(spec, t):
    tl = dist.tilt(spec, t)
    assert tl.normalizer == pytest.approx(float(dist.mgf(spec, t)), rel=1e-8)
    lo, hi = -dist.effective_range(spec), dist.effective_range(spec)
    mass = integrate.quad(lambda x: float(tl.density(x)), lo, hi, points=[0.0], limit=400)[0]
    assert abs(mass - 1) < 1e-8
    back = tl.tilt(-t)
    x = np.linspace(lo / 2, hi / 2, 21)
    np.testing.assert_allclose(back.density(x), dist.density(spec, x), atol=1e-8)


@given(st.floats(-3, 3))
def test_discrete_tilt_closed_form(t):
    q = dist.tilt(dist.rademacher(), t).law.support()[1]
    assert q[1] == pytest.approx(math.exp(t) / (2 * math.cosh(t)), rel=1e-12)


def test_config_roundtrip_and_errors():
    for spec in LAWS + [dist.rademacher(), dist.finite_discrete([(-1, 0.25), (0, 0.5), (1, 0.25)]), dist.scale_mixture(dist.gaussian(), dist.finite_discrete([(1, 0.5), (2, 0.5)]))]:
        assert dist.DistributionSpec.from_config(spec.to_config()) == spec
    with pytest.raises(ConfigError) as exc:
        dist.DistributionSpec.from_config({"family": "laplace", "bb": 1})
    assert exc.value.key == "dist.bb"
    with pytest.raises(ConfigError):
        dist.finite_discrete([(0, 0.5), (1, 0.4)])
    assert dist.DistributionSpec.from_config("gaussian") == dist.gaussian(1.0)


def test_mixture_uniform_is_degenerate():
    rep = dist.mixture_decompose(lambda x: np.where(np.abs(x) <= 0.5, 1.0, 0.0) * 1.0, grid=20001, s_max=0.75)
    xi = rep.sample_scale(1000, seed=0)
    assert np.allclose(xi, 1.0, atol=1e-3)


def test_mixture_triangular():
    f = lambda x: np.maximum(1 - np.abs(x), 0.0)
    rep = dist.mixture_decompose(f, grid=200001, s_max=1.2)
    x = np.linspace(-0.95, 0.95, 39)
    np.testing.assert_allclose(rep.mixture_density(x), 1 - np.abs(x), atol=1e-3)
    # xi = 2(1 - H) with H of density 2(1 - y): P{xi <= u} = u^2/4
    xi = rep.sample_scale(200_000, seed=2)
    assert stats.kstest(xi, lambda u: np.clip(u, 0, 2) ** 2 / 4).statistic < 1.63 / math.sqrt(xi.size)


def test_mixture_gaussian_area_and_ks():
    rep = dist.mixture_decompose(dist.gaussian(1.0))
    assert abs(rep.area() - 1) < 1e-6
    n = 10**5
    a = rep.sample(n, seed=3)
    assert stats.kstest(a, "norm").statistic < 1.63 / math.sqrt(n)


def test_mixture_rejects_bimodal():
    f = lambda x: 0.5 * (stats.norm.pdf(x, -2) + stats.norm.pdf(x, 2))
    with pytest.raises(ShapeError):
        dist.mixture_decompose(f, grid=10001, s_max=10)


@pytest.mark.parametrize("spec", [dist.rademacher(), dist.gaussian(1.0), dist.laplace(1 / math.sqrt(2))], ids=lambda s: s.describe())
def test_subexp_params_hold(spec):
    par = dist.measure_subexp(spec)
    assert dist.subexp_violation(spec, par) <= 1e-12

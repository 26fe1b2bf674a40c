import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from oracles import bvn_rect, grid_components, lattice_dist, rademacher_tilting_sides
from relanticonc import distributions as dist
from relanticonc.errors import CapabilityError, DomainError
from relanticonc.lcd import lcd_normalized
from relanticonc.sodin import (
    LatticePieces,
    PipelineScenario,
    choose_delta,
    corollary_check,
    cosine_dist_check,
    cf_integral_mc,
    cf_product_integral,
    dyadic_decomposition_check,
    gaussian_identity_check,
    gaussian_mass,
    interval_structure,
    mu_measure_bound,
    rescale,
    run_pipeline,
    tilting_check,
)

RAD = dist.rademacher()
PHI = lambda d: (np.abs(d) > 1.0).astype(float)


@pytest.mark.parametrize("t", [0.5, 0.1, 1.3])
def test_rademacher_tilting_matches_oracle(t):
    lhs, tilted, M = rademacher_tilting_sides(t)
    tc = tilting_check(RAD, t, PHI)
    assert tc["lhs"] == pytest.approx(lhs, abs=1e-15)
    assert tc["M"] == pytest.approx(M, rel=1e-14)
    assert tc["rhs"] == pytest.approx(M * M * tilted, rel=1e-12)
    # the squared factor is exactly tight for two-point laws; one power of M is not enough
    assert tc["pass"] and not tc["pass_literal"]


def test_corollary_example():
    cc = corollary_check(RAD, 0.5, 1.0)
    assert cc["lhs"] == pytest.approx(2 * (math.exp(0.5) / (2 * math.cosh(0.5))) * (1 - math.exp(0.5) / (2 * math.cosh(0.5))))
    assert cc["rhs"] == pytest.approx(0.39322, abs=1e-5)
    assert cc["pass"] and not cc["pass_literal"]


@pytest.mark.parametrize("spec", [dist.laplace(1.0), dist.gaussian(1.0), dist.uniform(-1, 1)], ids=lambda s: s.family)
def test_tilting_continuous(spec):
    for t in (0.2, 0.6):
        assert tilting_check(spec, t, PHI, n_cells=801)["pass"]
        assert corollary_check(spec, t, 0.5, n_cells=801)["pass"]


def test_tilting_needs_finite_mgf():
    with pytest.raises(CapabilityError):
        tilting_check(dist.laplace(1.0), 1.5, PHI)


def test_gaussian_identity_and_cosine():
    gi = gaussian_identity_check()
    assert gi["max_abs_error"] < 1e-10
    assert cosine_dist_check() >= -1e-12
    # equality at theta = pi: 1 - cos = 2 and 8 * (1/2)^2 = 2
    assert cosine_dist_check([math.pi]) == pytest.approx(0.0, abs=1e-15)


def test_choose_delta():
    d, p = choose_delta(RAD)
    assert d == 1.0 and p == 0.5
    d, p = choose_delta(dist.gaussian(1.0))
    assert d == pytest.approx(0.6744897501960817, rel=1e-9)
    # window of length delta centred at 0
    assert p == pytest.approx(2 * stats.norm.cdf(d / 2) - 1, abs=1e-3)
    with pytest.raises(CapabilityError):
        choose_delta(dist.point_mass(1.0))


def test_rescale_rademacher():
    rs = rescale(RAD)
    assert rs.spec.support()[0].max() == pytest.approx(1 / rs.b)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=4).filter(lambda c: any(abs(v) > 1e-3 for v in c)), st.floats(0.0, 0.45))
@settings(max_examples=25)
def test_lattice_pieces_exact(c, z):
    pcs = LatticePieces.build(c, 4.0)
    xs = np.linspace(-4, 4, 997)
    np.testing.assert_allclose(pcs.dist2(xs), lattice_dist(xs, c) ** 2, atol=1e-11)
    comps = pcs.components(z)
    inside = lattice_dist(xs, c) <= z - 1e-9
    covered = np.zeros_like(xs, dtype=bool)
    for lo, hi in comps:
        covered |= (xs >= lo - 1e-9) & (xs <= hi + 1e-9)
    assert np.all(covered[inside])


def test_zero_vector_rejected():
    with pytest.raises(DomainError):
        LatticePieces.build([0.0, 0.0], 1.0)


def test_components_match_grid_oracle():
    c = np.array([0.37, 1.1, -0.6])
    h = 1e-4
    comps = LatticePieces.build(c, 3.0).components(0.2)
    ref = grid_components(c, 0.2, 3.0, h)
    assert len(comps) == len(ref)
    for (lo, hi), (rl, rh) in zip(comps, ref):
        assert lo == pytest.approx(rl, abs=2 * h) and hi == pytest.approx(rh, abs=2 * h)
    assert float(LatticePieces.build(c, 3.0).measure(0.2)[0]) == pytest.approx(gaussian_mass(comps), rel=1e-12)


def _scen(spec=RAD, n=4, **kw):
    return PipelineScenario.make("t", spec, np.ones(n), np.ones(n), **kw)


def test_interval_structure_and_mu():
    scen = _scen(n=8, gamma=0.5)
    L = lcd_normalized(np.ones(8), 0.5).theta_star
    assert not interval_structure(scen, 0.1, 1.0, L)["applicable"]  # needs 40 z < L
    for z in (0.01, 0.03, 0.06):
        st_ = interval_structure(scen, z, 1.0, L)
        assert st_["applicable"] and st_["pass"]
        assert st_["max_len"] <= st_["predicted_max_len"] + 1e-9
        mu, bd = mu_measure_bound(scen, z, 1.0, L)
        assert mu <= bd


def test_scenario_validation():
    with pytest.raises(DomainError):
        PipelineScenario("x", RAD, (1.0, 1.0), (1.0, 0.0))
    with pytest.raises(CapabilityError):
        _scen(spec=dist.finite_discrete([(0, 0.5), (1, 0.5)]))
    with pytest.raises(DomainError):
        _scen(epsilon=0)


def test_cf_integral_quadrature_vs_mc():
    a = np.ones(4) / 2
    b = np.array([0.5, -0.5, 0.5, 0.5])
    rs = rescale(RAD)
    q = cf_product_integral(rs.spec, a, b, 0.1, 1.0, rs.nu)
    m, se = cf_integral_mc(rs.spec, a, b, 0.1, 1.0, 200_000, 3)
    assert abs(q.value - m) <= 4 * se + 1e-9


def test_gaussian_dyadic_pieces_vs_bivariate_normal():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=3), rng.normal(size=3)
    scen = PipelineScenario.make("g", dist.gaussian(1.0), a, b, n_samples=400_000, seed=5)
    rho = float(scen.alpha.entries @ scen.beta.entries)
    sig = 1.0 / rescale(dist.gaussian(1.0)).b
    dy = dyadic_decomposition_check(scen)
    assert dy["contained"]
    eps = scen.epsilon
    for k in range(min(dy["k_max"], 3) + 1):
        u = 2.0 ** (k + 1) * eps / sig
        ref = 2 * bvn_rect(rho, -u, u, 2.0**k / sig, 2.0 ** (k + 1) / sig)
        piece = dy["pieces"][k + 1]
        se = math.sqrt(max(ref * (1 - ref), 1e-12) / piece["n"])
        assert abs(piece["value"] - ref) <= 4 * se + 1e-6
    assert dy["residual"]["value"] <= dy["residual_bound"]


def test_pipeline_small_scenario():
    rep = run_pipeline(_scen(n=4, n_samples=50_000, seed=2))
    assert rep.passed, [c.to_dict() for c in rep.failures()]
    steps = {c.step for c in rep.checks}
    assert {"tilting", "interval_structure", "mu_measure", "dyadic_residual", "end_to_end"} <= steps
    end = [c for c in rep.checks if c.step == "end_to_end"][0]
    assert end.lhs <= end.rhs


def test_trivial_tilt_cases():
    tc = tilting_check(RAD, 0.0, PHI)
    assert tc["lhs"] == tc["rhs"] and tc["M"] == 1
    assert tilting_check(RAD, 0.7, lambda d: np.zeros_like(d))["rhs"] == 0
    cc = corollary_check(RAD, 0.0, 1.0)
    assert cc["lhs"] == cc["rhs"]
    cc = corollary_check(RAD, 0.5, 5.0)
    assert cc["lhs"] == cc["rhs"] == 0


def test_gaussian_identity_values():
    gi = gaussian_identity_check([0.0, 1.0, 5.0])
    lhs = [r[0] for r in gi["rows"]]
    assert lhs[0] == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert lhs[1] == pytest.approx(0.65205, abs=1e-5)
    assert lhs[2] == pytest.approx(math.sqrt(math.pi) * math.exp(-25), rel=1e-6)


def test_cf_integral_limits():
    # zero frequencies (large eps) and zero tilt: the integrand is e^{-x^2}
    q = cf_product_integral(RAD, np.array([1e-14, 0.0]), np.zeros(2), 1.0, 1.0, 1.0)
    assert q.value == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    q = cf_product_integral(RAD, np.array([1.0]), np.zeros(1), 1.0, 1.0, 1.0)
    assert q.value < math.sqrt(math.pi)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_lcd, lattice_dist
from relanticonc.errors import DomainError
from relanticonc.lcd import CoefficientVector, default_search_cap, dist_to_lattice, lcd, lcd_normalized


def test_dist_examples():
    assert dist_to_lattice(0.5, (1, 1)) == pytest.approx(math.sqrt(0.5))
    assert dist_to_lattice(1.0, (3, 7)) == 0
    assert dist_to_lattice(2.5, (0.2, 0.4)) == pytest.approx(0.5)


@given(st.floats(0.01, 50), st.lists(st.floats(-5, 5), min_size=1, max_size=6))
def test_dist_matches_oracle(theta, a):
    assert dist_to_lattice(theta, a) == pytest.approx(float(lattice_dist(theta, a)[0]), abs=1e-12)


def test_closed_cases():
    assert lcd((1, 0), 0.2).theta_star == pytest.approx(10 / 11, abs=1e-8)
    assert lcd(np.full(9, 1 / 3), 0.2).theta_star == pytest.approx(2.8, abs=1e-8)
    assert lcd((1, 0), 0.05).theta_star == pytest.approx(0.95, abs=1e-8)


def test_result_invariant():
    r = lcd((0.3, 0.7, -0.2), 0.5)
    a = np.array([0.3, 0.7, -0.2])
    assert not r.capped
    assert r.achieved_dist <= min(r.gamma, r.theta_star * np.linalg.norm(a) / 10) + 1e-8


def test_errors():
    with pytest.raises(DomainError):
        lcd((0, 0), 0.1)
    with pytest.raises(DomainError):
        lcd((1, 0), 0.0)
    with pytest.raises(DomainError):
        lcd((1, 0), 0.1, tol=-1)


def test_capped_result():
    r = lcd((1.0, math.sqrt(2)), 1e-6, search_cap=5.0)
    assert r.capped and r.search_cap == 5.0
    assert r.inverse == pytest.approx(1 / 5.0)


def test_default_cap():
    a = CoefficientVector.of(np.ones(4) / 2)
    assert default_search_cap(a) == pytest.approx(1e3 * 4)


@given(st.lists(st.floats(0.05, 3), min_size=1, max_size=5), st.floats(0.3, 5))
def test_scale_covariance(a, c):
    g = 0.3
    r1 = lcd(a, g, search_cap=2e3)
    r2 = lcd(np.asarray(a) * c, g, search_cap=2e3 / c)
    if not r1.capped:
        assert r2.theta_star == pytest.approx(r1.theta_star / c, abs=2e-9 * max(1, 1 / c) + 2e-9)


@given(st.lists(st.floats(-3, 3).filter(lambda v: abs(v) > 0.05), min_size=2, max_size=5), st.randoms())
def test_permutation_sign_invariance(a, rnd):
    b = list(a)
    rnd.shuffle(b)
    b = [v * rnd.choice([-1, 1]) for v in b]
    assert lcd(a, 0.3).theta_star == pytest.approx(lcd(b, 0.3).theta_star, abs=1e-8)


@given(st.lists(st.integers(-4, 4), min_size=1, max_size=5).filter(lambda v: any(v)))
def test_integer_vectors(v):
    a = np.asarray(v, dtype=float)
    r = lcd_normalized(a, 0.5)
    assert r.theta_star <= np.linalg.norm(a) + 1e-8
    assert dist_to_lattice(np.linalg.norm(a), a / np.linalg.norm(a)) < 1e-12


@given(st.lists(st.floats(0.1, 2), min_size=2, max_size=4), st.floats(0.05, 0.5), st.floats(0.0, 1.0))
def test_monotone_in_gamma(a, g, extra):
    assert lcd(a, g + extra).theta_star <= lcd(a, g).theta_star + 1e-8


def test_matches_brute_force_small():
    rng = np.random.default_rng(5)
    for _ in range(5):
        n = int(rng.integers(1, 5))
        a = rng.normal(size=n)
        a /= np.linalg.norm(a)
        g = math.sqrt(n) / 2
        assert lcd(a, g).theta_star == pytest.approx(brute_lcd(a, g), abs=1e-4)

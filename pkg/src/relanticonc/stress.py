"""Adversarial search for large LHS/RHS ratios, and the alpha_i = i, beta_i = 1 family."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .bounds import BoundReport, gaussian_bound, theorem_bound
from .errors import DomainError
from .estimators import ProbEstimate, estimate, gaussian_probability
from .lcd import CoefficientVector
from .rng import child_seeds, make_rng

MOVES = (0.5, 0.9, 1.1, 2.0, -1.0)  # -1 is the sign flip
MIN_BETA_RATIO = 1e-4
SEARCH_LIMIT = 2**16


def _estimate(alpha, beta, spec, method, n_samples, seed, limit) -> ProbEstimate:
    if spec.family == "gaussian" and method in ("auto", "closed-form"):
        a = CoefficientVector.of(alpha)
        # the closed form is for unit-variance coordinates; the event is scale invariant
        p = gaussian_probability(a, beta)
        return ProbEstimate(p, "closed-form", 1.0, p, p, 0)
    return estimate(alpha, beta, spec, method=method, limit=limit, n_samples=n_samples, seed=seed)


def _bound(alpha, beta, theorem_id, constants, gamma) -> BoundReport:
    if theorem_id == "gaussian":
        return gaussian_bound(alpha, beta)
    return theorem_bound(theorem_id, alpha, beta, gamma=gamma, constants=constants)


@dataclass
class RatioResult:
    ratio: float
    ratio_lo: float
    ratio_hi: float
    estimate: ProbEstimate
    bound: BoundReport

    def to_dict(self):
        return {"ratio": self.ratio, "ratio_lo": self.ratio_lo, "ratio_hi": self.ratio_hi, "estimate": self.estimate.to_dict(), "bound": self.bound.to_dict()}


def _div(p, rhs):
    if rhs > 0:
        return p / rhs
    return math.inf if p > 0 else 0.0


def ratio(
    alpha,
    beta,
    spec: dist.DistributionSpec,
    theorem_id: str = "conjecture",
    method: str = "auto",
    constants: dict | None = None,
    gamma: float | None = None,
    n_samples: int = 20_000,
    seed: int = 0,
    limit: int = SEARCH_LIMIT,
) -> RatioResult:
    """Estimated P{|<alpha,X>| <= |<beta,X>|} divided by the bound; rhs = 0 with P > 0 gives inf."""
    est = _estimate(alpha, beta, spec, method, n_samples, seed, limit)
    bd = _bound(alpha, beta, theorem_id, constants, gamma)
    return RatioResult(_div(est.value, bd.rhs), _div(est.ci_lo, bd.rhs), _div(est.ci_hi, bd.rhs), est, bd)


@dataclass
class SearchResult:
    best_alpha: CoefficientVector
    best_beta: CoefficientVector
    ratio: float
    estimate: ProbEstimate
    bound: BoundReport
    trace: list = field(default_factory=list)
    seed: int = 0

    def recomputed_ratio(self) -> float:
        return _div(self.estimate.value, self.bound.rhs)

    def to_dict(self) -> dict:
        return {
            "best_alpha": self.best_alpha.tolist(),
            "best_beta": self.best_beta.tolist(),
            "ratio": self.ratio,
            "estimate": self.estimate.to_dict(),
            "bound": self.bound.to_dict(),
            "trace": [list(t) for t in self.trace],
            "seed": self.seed,
        }


def _climb(spec, n, theorem_id, steps, seed, constants, gamma, method, n_samples, limit, structured=False) -> SearchResult:
    rng = make_rng(seed)
    # structured restarts start from a random sign vector, where lattice structure lives
    a = rng.choice([-1.0, 1.0], size=n) if structured else rng.normal(size=n)
    a /= np.linalg.norm(a)
    b = rng.normal(size=n)
    b *= 10 ** rng.uniform(-3, 0) / np.linalg.norm(b)
    eval_seeds = iter(child_seeds(seed, steps + 1))
    cur = ratio(a, b, spec, theorem_id, method, constants, gamma, n_samples, next(eval_seeds), limit)
    trace = [(0, cur.ratio)]
    for it in range(1, steps + 1):
        na, nb = a.copy(), b.copy()
        vec = na if rng.random() < 0.5 else nb
        i = int(rng.integers(n))
        vec[i] *= MOVES[int(rng.integers(len(MOVES)))]
        scale = np.linalg.norm(na)
        na, nb = na / scale, nb / scale  # the ratio is invariant under joint scaling
        s = next(eval_seeds)
        if np.linalg.norm(nb) >= MIN_BETA_RATIO and np.all(np.isfinite(nb)):
            new = ratio(na, nb, spec, theorem_id, method, constants, gamma, n_samples, s, limit)
            if cur.estimate.method == "monte-carlo" or new.estimate.method == "monte-carlo":
                better = new.ratio_lo > cur.ratio_hi  # CI-aware: noise alone cannot win
            else:
                better = new.ratio > cur.ratio
            if better:
                a, b, cur = na, nb, new
        trace.append((it, cur.ratio))
    return SearchResult(CoefficientVector.of(a), CoefficientVector.of(b), cur.ratio, cur.estimate, cur.bound, trace, int(seed))


def search(
    spec: dist.DistributionSpec,
    n: int,
    theorem_id: str = "conjecture",
    restarts: int = 4,
    steps: int = 200,
    seed: int = 0,
    constants: dict | None = None,
    gamma: float | None = None,
    method: str = "auto",
    n_samples: int = 20_000,
    workers: int = 1,
    limit: int = SEARCH_LIMIT,
) -> SearchResult:
    """Random-restart hill climbing on (alpha, beta); best restart by ratio, ties to the smaller seed.

    Even restarts start alpha from a Gaussian vector, odd ones from a random sign vector.
    """
    if n < 2:
        raise DomainError("search needs n >= 2")
    seeds = child_seeds(seed, restarts)
    job = lambda r: _climb(spec, n, theorem_id, steps, seeds[r], constants, gamma, method, n_samples, limit, structured=r % 2 == 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(job, range(restarts)))
    else:
        runs = [job(r) for r in range(restarts)]
    return max(runs, key=lambda r: (r.ratio, -r.seed))


@dataclass
class SozeRow:
    n: int
    prob: float
    n_times_p: float
    method: str
    ci_hi: float

    def to_dict(self):
        return dict(self.__dict__)


def soze_family(n_list, spec: dist.DistributionSpec | None = None, n_samples: int = 200_000, seed: int = 0, limit: int = 2**24) -> dict:
    """P{|sum i X_i| <= |sum X_i|} for each n, with n*P and the largest n*P as the reported constant."""
    spec = spec or dist.rademacher()
    rows = []
    for n in n_list:
        if n < 1:
            raise DomainError("n must be positive")
        alpha = np.arange(1, n + 1, dtype=float)
        beta = np.ones(n)
        est = estimate(alpha, beta, spec, method="auto", limit=limit, n_samples=n_samples, seed=seed)
        rows.append(SozeRow(int(n), est.value, n * est.value, est.method, est.ci_hi))
    const = max((r.n_times_p for r in rows), default=0.0)
    return {"rows": rows, "constant": const, "all_bounded": all(r.n_times_p <= const for r in rows)}

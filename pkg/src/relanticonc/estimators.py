"""Estimators for P{|<alpha,X>| <= |<beta,X>|}, concentration functions and tails."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .distributions import DistributionSpec, _draw
from .errors import CapabilityError, DomainError, SizeError
from .lcd import CoefficientVector
from .rng import spawn

DEFAULT_LIMIT = 2**24
CHUNK = 2**16


@dataclass(frozen=True)
class ProbEstimate:
    value: float
    method: str  # "exact" | "monte-carlo" | "closed-form"
    ci_level: float
    ci_lo: float
    ci_hi: float
    n_samples: int
    seed: int | None = None
    successes: int | None = None

    @property
    def std_error(self) -> float:
        if self.method != "monte-carlo":
            return 0.0
        p = self.value
        return math.sqrt(max(p * (1 - p), 0.0) / self.n_samples)

    def to_dict(self) -> dict:
        return asdict(self)


def wilson_interval(successes: int, n: int, level: float) -> tuple[float, float]:
    z = stats.norm.ppf(0.5 + level / 2)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # p-hat always lies inside the Wilson interval; clip guards rounding at 0 and 1
    return float(max(0.0, min(centre - half, p))), float(min(1.0, max(centre + half, p)))


def _tie_tol(a: np.ndarray, b: np.ndarray, vals_max: float) -> float:
    # float round-off guard for exact ties such as |2|<=|2|
    return 1e-12 * (np.abs(a).sum() + np.abs(b).sum()) * max(vals_max, 1.0)


def _event(U, V, tol, strict):
    if strict:
        return np.abs(U) < np.abs(V) - tol
    return np.abs(U) <= np.abs(V) + tol


def _check_pair(alpha, beta):
    a, b = CoefficientVector.of(alpha), CoefficientVector.of(beta)
    if a.n != b.n:
        raise DomainError(f"alpha has length {a.n} but beta has length {b.n}")
    return a, b


def exact_probability(alpha, beta, spec: DistributionSpec, limit: int = DEFAULT_LIMIT, strict: bool = False) -> ProbEstimate:
    """Full enumeration of support^n with product weights (log-space, extended-precision sum)."""
    a, b = _check_pair(alpha, beta)
    if not spec.finite_support:
        raise CapabilityError(f"exact enumeration needs a finite-support law, got {spec.describe()}; use mc")
    vals, probs = spec.support()
    s, n = len(vals), a.n
    if s**n > limit:
        raise SizeError(f"support^n = {s}^{n} exceeds the enumeration limit {limit}; use --method mc")
    logp = np.log(probs)
    tol = _tie_tol(a.entries, b.entries, float(np.max(np.abs(vals))))

    # vectorize the trailing m coordinates, loop over the leading ones
    m = n
    while m > 0 and s**m > 2**16:
        m -= 1
    inner_u = np.zeros(1)
    inner_v = np.zeros(1)
    inner_w = np.zeros(1)
    for i in range(n - m, n):
        inner_u = np.add.outer(inner_u, a.entries[i] * vals).ravel()
        inner_v = np.add.outer(inner_v, b.entries[i] * vals).ravel()
        inner_w = np.add.outer(inner_w, logp).ravel()

    total = np.longdouble(0.0)
    for lead in itertools.product(range(s), repeat=n - m):
        idx = np.array(lead, dtype=int)
        u0 = float(np.dot(a.entries[: n - m], vals[idx])) if lead else 0.0
        v0 = float(np.dot(b.entries[: n - m], vals[idx])) if lead else 0.0
        w0 = float(np.sum(logp[idx])) if lead else 0.0
        mask = _event(u0 + inner_u, v0 + inner_v, tol, strict)
        total += np.sum(np.exp(w0 + inner_w[mask]), dtype=np.longdouble)
    value = float(min(max(total, 0.0), 1.0))
    return ProbEstimate(value, "exact", 1.0, value, value, s**n, None, None)


def _count_chunk(a, b, spec, size, rng, tol, strict):
    X = _draw(spec, size * a.size, rng).reshape(size, a.size)
    return int(np.count_nonzero(_event(X @ a, X @ b, tol, strict)))


def mc_probability(
    alpha,
    beta,
    spec: DistributionSpec,
    n_samples: int = 100_000,
    seed: int = 0,
    ci_level: float = 0.99,
    chunk_size: int = CHUNK,
    workers: int = 1,
    strict: bool = False,
) -> ProbEstimate:
    """Chunked Monte Carlo with one RNG stream per chunk and a Wilson interval.

    The result depends only on (seed, n_samples, chunk_size), never on ``workers``.
    """
    a, b = _check_pair(alpha, beta)
    if n_samples < 100:
        raise DomainError("n_samples must be at least 100")
    if not spec.sampleable:
        raise CapabilityError(f"{spec.describe()} is not sampleable")
    n_chunks = -(-n_samples // chunk_size)
    sizes = [min(chunk_size, n_samples - c * chunk_size) for c in range(n_chunks)]
    rngs = spawn(seed, n_chunks)
    vmax = float(np.max(np.abs(spec.support()[0]))) if spec.finite_support else 1.0
    tol = _tie_tol(a.entries, b.entries, vmax) if spec.finite_support else 0.0
    job = lambda c: _count_chunk(a.entries, b.entries, spec, sizes[c], rngs[c], tol, strict)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(job, range(n_chunks)))
    else:
        counts = [job(c) for c in range(n_chunks)]
    k = sum(counts)
    lo, hi = wilson_interval(k, n_samples, ci_level)
    return ProbEstimate(k / n_samples, "monte-carlo", ci_level, lo, hi, n_samples, int(seed), k)


def estimate(alpha, beta, spec, method: str = "auto", limit: int = DEFAULT_LIMIT, **mc_kwargs) -> ProbEstimate:
    """Exact when feasible (or requested), Monte Carlo otherwise."""
    if method not in ("auto", "exact", "mc"):
        raise DomainError(f"unknown method {method!r}")
    if method == "exact" or (method == "auto" and spec.finite_support and len(spec.support()[0]) ** len(CoefficientVector.of(alpha)) <= limit):
        return exact_probability(alpha, beta, spec, limit=limit)
    return mc_probability(alpha, beta, spec, **mc_kwargs)


def gaussian_probability(alpha, beta) -> float:
    """Closed form for i.i.d. standard Gaussians: the Cauchy mass of [a-l, a+l]."""
    a, b = _check_pair(alpha, beta)
    if a.is_zero:
        raise DomainError("alpha must be nonzero")
    if b.is_zero:
        return 0.0
    rho = float(np.dot(a.entries, b.entries)) / (a.norm * b.norm)
    theta = b.norm / a.norm
    s = math.sqrt(max(1.0 - rho * rho, 0.0))
    if s < 1e-15:
        return 1.0 if theta >= 1.0 else 0.0
    centre, half = rho / s, theta / s
    return (math.atan(centre + half) - math.atan(centre - half)) / math.pi


def concentration_fn(samples, t: float) -> float:
    """Empirical Levy concentration function sup_a P{a <= X <= a+t} (two-pointer sweep)."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise DomainError("samples must be nonempty")
    if t < 0:
        raise DomainError("t must be nonnegative")
    j = np.searchsorted(x, x + t, side="right")
    return float(np.max(j - np.arange(x.size))) / x.size


def tail_prob(samples, u: float) -> float:
    """Empirical P{|X| > u}."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DomainError("samples must be nonempty")
    return float(np.count_nonzero(np.abs(x) > u)) / x.size


def linear_form_samples(beta, spec: DistributionSpec, n_samples: int, seed: int, chunk_size: int = CHUNK) -> np.ndarray:
    """Draws of <beta, X> (chunked streams, as in mc_probability)."""
    b = CoefficientVector.of(beta)
    n_chunks = -(-n_samples // chunk_size)
    rngs = spawn(seed, n_chunks)
    out = []
    for c in range(n_chunks):
        size = min(chunk_size, n_samples - c * chunk_size)
        out.append(_draw(spec, size * b.n, rngs[c]).reshape(size, b.n) @ b.entries)
    return np.concatenate(out)

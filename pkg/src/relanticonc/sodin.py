"""Step-by-step numerical replay of the Fourier/tilting proof of the LCD small-ball bound.

For unit vectors alpha, beta put U = <alpha, X>, V = <beta, X>. The chain is

    P{|U| < eps R, V >= R} <= e^{1-R} E exp(V - U^2/(eps R)^2)                (Markov)
        = e^{1-R}/sqrt(pi) prod M(beta_k) int prod phi_k(t_k x) e^{-x^2} dx   (Gaussian identity)
        <= e^{1-R}/sqrt(pi) prod M(beta_k) sup_{|w|>=delta} Phi(w)             (tilt comparison)

with t_k = 2 alpha_k/(eps R), phi_k the cf of the law tilted by beta_k, and
Phi(w) = int exp(-(q tau/2) sum_k (1 - cos(t_k x w)) - x^2) dx. Phi is then
bounded through the lattice-distance sets I(z) = {x : dist(x w alpha/(pi eps R), Z^n) <= z}.

Every step is an :class:`InequalityCheck` carrying lhs, rhs, slack and pass.
All work happens on the law rescaled to sub-exponential parameters (nu, 1).
"""
from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, special

from . import distributions as dist
from .bounds import bernstein_tail
from .errors import CapabilityError, DomainError, NumericError
from .estimators import wilson_interval
from .lcd import CoefficientVector, LcdResult, lcd_normalized
from .rng import child_seeds, spawn

X_MAX = math.sqrt(math.log(1e16))  # e^{-x^2} < 1e-16 beyond this
SQRT_PI = math.sqrt(math.pi)
GRID_CELLS = 4001
_GX, _GW = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class PipelineScenario:
    name: str
    spec: dist.DistributionSpec
    alpha: CoefficientVector
    beta: CoefficientVector
    epsilon: float = 0.1
    R: float = 1.0
    gamma: float = 0.5
    delta: float | None = None  # None: chosen from the law
    n_samples: int = 200_000
    seed: int = 0
    x_max: float = X_MAX
    epsabs: float = 1e-10
    w_points: int = 64

    def __post_init__(self):
        for nm in ("alpha", "beta"):
            v = getattr(self, nm)
            if not isinstance(v, CoefficientVector):
                object.__setattr__(self, nm, CoefficientVector.of(v))
            if abs(getattr(self, nm).norm - 1.0) > 1e-12:
                raise DomainError(f"{nm} must be a unit vector (norm {getattr(self, nm).norm!r})")
        if self.alpha.n != self.beta.n:
            raise DomainError("alpha and beta must have the same length")
        if not (self.epsilon > 0 and self.R >= 1 and self.gamma > 0):
            raise DomainError("need epsilon > 0, R >= 1 and gamma > 0")
        if self.delta is not None and not self.delta > 0:
            raise DomainError("delta must be positive")
        if not self.spec.symmetric:
            raise CapabilityError(f"{self.spec.describe()} is not symmetric")
        grid = np.linspace(0.1, 5.0, 11)
        if np.max(np.abs(np.imag(dist.cf(self.spec, grid)))) > 1e-10:
            raise CapabilityError("characteristic function is not real; law is not symmetric")

    @classmethod
    def make(cls, name, spec, alpha, beta, **kw) -> "PipelineScenario":
        """Normalizes alpha and beta before validation."""
        return cls(name, spec, CoefficientVector.of(alpha).normalized(), CoefficientVector.of(beta).normalized(), **kw)

    def to_config(self) -> dict:
        return {
            "name": self.name,
            "dist": self.spec.to_config(),
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "epsilon": self.epsilon,
            "R": self.R,
            "gamma": self.gamma,
            "delta": self.delta,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


@dataclass
class InequalityCheck:
    step: str
    lhs: float
    rhs: float
    passed: bool
    detail: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {"step": self.step, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "pass": self.passed, "detail": self.detail}


def _le(step, lhs, rhs, tol=0.0, **detail) -> InequalityCheck:
    lhs, rhs = float(lhs), float(rhs)
    return InequalityCheck(step, lhs, rhs, bool(lhs <= rhs + tol), detail)


# ---- rescaling, delta, tilts ---------------------------------------------------
@dataclass(frozen=True)
class Rescaled:
    spec: dist.DistributionSpec  # X / b
    nu: float  # sub-exponential parameter of X / b (with b = 1)
    b: float
    nu_original: float


def rescale(spec: dist.DistributionSpec) -> Rescaled:
    """Replace X by X/b so the law is sub-exponential with parameters (nu/b, 1)."""
    par = dist.measure_subexp(spec)
    return Rescaled(dist.scaled(spec, 1.0 / par.b), par.nu / par.b, par.b, par.nu)


def _levy_q(spec: dist.DistributionSpec, t: float) -> float:
    """Q_X(t) = sup_a P{a <= X <= a + t}."""
    if spec.finite_support:
        v, p = spec.support()
        best = 0.0
        for i in range(len(v)):
            best = max(best, float(p[(v >= v[i]) & (v <= v[i] + t + 1e-12)].sum()))
        return best
    r = dist.effective_range(spec)
    a = np.linspace(-r, r, 4001)
    return float(np.max(dist.cdf(spec, a + t) - dist.cdf(spec, a)))


def choose_delta(spec: dist.DistributionSpec) -> tuple[float, float]:
    """delta = half the smallest atom gap (discrete) or the interquartile half-width; p = Q_X(delta)."""
    if spec.finite_support:
        v = spec.support()[0]
        if len(v) < 2:
            raise CapabilityError("a point mass has no anti-concentration")
        delta = float(np.min(np.diff(v))) / 2
    else:
        from scipy import optimize

        q3 = optimize.brentq(lambda x: float(dist.cdf(spec, x)) - 0.75, 0.0, dist.effective_range(spec))
        delta = q3  # symmetric law: IQR/2 = upper quartile
    return delta, _levy_q(spec, delta)


def _law_grid(spec, t: float = 0.0, n_cells: int = GRID_CELLS):
    """(nodes, weights, M) of the law tilted by t; exact atoms for discrete laws, grid otherwise."""
    x, w = dist.discretize(spec, n_cells=n_cells)
    if t == 0.0:
        return x, w, 1.0
    logw = np.log(np.where(w > 0, w, 1e-300)) + t * x
    shift = float(logw.max())
    e = np.where(w > 0, np.exp(logw - shift), 0.0)
    s = math.fsum(e)
    return x, e / s, math.exp(shift) * s


def _difference(spec, x, w):
    """Law of X - X' for X, X' i.i.d. with atoms (x, w)."""
    if spec.finite_support:
        d, q = dist._merge_atoms(np.subtract.outer(x, x).ravel(), np.outer(w, w).ravel())
        return d, q
    h = x[1] - x[0]
    q = np.convolve(w, w[::-1])
    k = (len(q) - 1) // 2
    return h * np.arange(-k, k + 1), q


def tilting_check(spec: dist.DistributionSpec, t: float, phi, n_cells: int = GRID_CELLS) -> dict:
    """Both sides of int int phi(x-x') dF dF <= M(t)^2 int int phi(x-x') dF_t dF_t.

    Continuous laws are discretized on a symmetric grid; the inequality is then an
    exact statement about the discretized (still symmetric) law. ``rhs_literal``
    carries M(t) to the first power, which the Cauchy-Schwarz step does not give.
    """
    x, w, _ = _law_grid(spec, 0.0, n_cells)
    if abs(t) >= dist.mgf_radius(spec):
        raise CapabilityError(f"MGF of {spec.describe()} is infinite at t={t:g}")
    xt, wt, M = _law_grid(spec, t, n_cells)
    d0, q0 = _difference(spec, x, w)
    dt, qt = _difference(spec, xt, wt)
    phi0, phit = np.asarray(phi(d0), dtype=float), np.asarray(phi(dt), dtype=float)
    if np.any(phi0 < 0) or np.any(phi0 > 1):
        raise DomainError("phi must take values in [0, 1]")
    lhs = math.fsum(phi0 * q0)
    inner = math.fsum(phit * qt)
    tol = 1e-12 if spec.finite_support else 1e-10
    return {
        "lhs": lhs,
        "rhs": M * M * inner,
        "rhs_literal": M * inner,
        "M": M,
        "pass": lhs <= M * M * inner + tol,
        "pass_literal": lhs <= M * inner + tol,
    }


def corollary_check(spec: dist.DistributionSpec, t: float, delta: float, n_cells: int = GRID_CELLS) -> dict:
    """P{|W_t| >= delta} against P{|W| >= delta}/M(t)^2 (and the literal 1/M(t) form)."""
    x, w, _ = _law_grid(spec, 0.0, n_cells)
    xt, wt, M = _law_grid(spec, t, n_cells)
    d0, q0 = _difference(spec, x, w)
    dt, qt = _difference(spec, xt, wt)
    tol = 1e-12 if spec.finite_support else 1e-10
    lhs = math.fsum(qt[np.abs(dt) >= delta - 1e-12])
    base = math.fsum(q0[np.abs(d0) >= delta - 1e-12])
    return {
        "lhs": lhs,
        "rhs": base / (M * M),
        "rhs_literal": base / M,
        "M": M,
        "pass": lhs + tol >= base / (M * M),
        "pass_literal": lhs + tol >= base / M,
    }


def _distinct(values, decimals=12):
    return sorted(set(np.round(np.asarray(values, dtype=float), decimals).tolist()))


def measure_q_tau(spec: dist.DistributionSpec, betas, delta: float, s_grid=None, n_cells: int = GRID_CELLS) -> tuple[float, float]:
    """q = min_k P{|W_k| >= delta}; tau = min over k, s of the conditional 1-cos ratio.

    W_k is the symmetrized difference of the law tilted by beta_k, W the untilted one.
    Points s where the untilted conditional expectation vanishes are skipped.
    """
    if s_grid is None:
        s_grid = np.logspace(-3, 2, 400)
    s_grid = np.asarray(s_grid, dtype=float)
    x, w, _ = _law_grid(spec, 0.0, n_cells)
    d0, q0 = _difference(spec, x, w)
    m0 = (np.abs(d0) >= delta - 1e-12) & (q0 > 1e-300)
    p0 = q0[m0] / q0[m0].sum()
    base = (1 - np.cos(np.outer(s_grid, d0[m0]))) @ p0
    q, tau = 1.0, math.inf
    for bk in _distinct(betas):
        xt, wt, _ = _law_grid(spec, bk, n_cells)
        dt, qt = _difference(spec, xt, wt)
        mt = (np.abs(dt) >= delta - 1e-12) & (qt > 1e-300)
        qk = float(qt[mt].sum())
        q = min(q, qk)
        pt = qt[mt] / qk
        num = (1 - np.cos(np.outer(s_grid, dt[mt]))) @ pt
        ok = base > 1e-9
        if np.any(ok):
            tau = min(tau, float(np.min(num[ok] / base[ok])))
    return q, tau


# ---- Fourier side -------------------------------------------------------------------
def tilted_cf_modulus(spec, beta_k: float, lam):
    """|phi(lam - i beta_k)| / M(beta_k), the modulus of the cf of the tilted law."""
    lam = np.asarray(lam, dtype=float)
    M = float(dist.mgf(spec, beta_k))
    return np.abs(dist.cf_complex(spec, lam - 1j * beta_k)) / M


def _cf_product(spec, alpha, beta, eps, R):
    t = 2.0 * np.asarray(alpha) / (eps * R)
    b = np.asarray(beta)
    Ms = np.array([float(dist.mgf(spec, bk)) for bk in b])

    def f(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = np.multiply.outer(x, t) - 1j * b
        mod = np.abs(dist.cf_complex(spec, z)) / Ms
        return np.prod(mod, axis=-1) * np.exp(-x * x)

    return f, Ms


@dataclass(frozen=True)
class CfIntegral:
    value: float
    abserr: float
    prod_M: float
    prefactor_bound: float  # e^{nu^2/2}

    def to_dict(self):
        return dict(self.__dict__)


def cf_product_integral(spec, alpha, beta, epsilon: float, R: float, nu: float, x_max: float = X_MAX, epsabs: float = 1e-10) -> CfIntegral:
    """int prod_k |phi_k(t_k x)| e^{-x^2} dx on |x| <= x_max, by adaptive quadrature."""
    f, Ms = _cf_product(spec, CoefficientVector.of(alpha).entries, CoefficientVector.of(beta).entries, epsilon, R)
    g = lambda x: float(f(x)[0])
    # split at 0 and at several points so the adaptive rule sees the oscillation
    pts = np.linspace(-x_max, x_max, 65)
    val, err = 0.0, 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        v, e = integrate.quad(g, a, b, epsabs=epsabs / 64, epsrel=1e-10, limit=200)
        val += v
        err += e
    if err > 1e3 * epsabs:
        raise NumericError(f"cf product quadrature did not converge (error estimate {err:.3g})")
    return CfIntegral(val, err, float(np.prod(Ms)), math.exp(nu * nu / 2))


def cf_integral_mc(spec, alpha, beta, epsilon, R, n: int, seed) -> tuple[float, float]:
    """sqrt(pi) E prod|phi_k(t_k x)| with x ~ N(0, 1/2): plain MC of the same integral (no truncation)."""
    f, _ = _cf_product(spec, CoefficientVector.of(alpha).entries, CoefficientVector.of(beta).entries, epsilon, R)
    x = spawn(seed, 1)[0].normal(0.0, math.sqrt(0.5), size=n)
    vals = SQRT_PI * f(x) * np.exp(x * x)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


_MP_LOCK = threading.Lock()  # mpmath precision is process-global state


@lru_cache(maxsize=8)
def _gauss_identity(t_grid: tuple, dps: int) -> tuple:
    out = []
    with mpmath.workdps(dps):
        nodes = mpmath.linspace(-10, 10, 41)
        for t in t_grid:
            tt = mpmath.mpf(t)
            lhs = mpmath.quad(lambda x: mpmath.cos(2 * tt * x) * mpmath.exp(-x * x), nodes)
            rhs = mpmath.sqrt(mpmath.pi) * mpmath.exp(-tt * tt)
            out.append((float(lhs), float(rhs), float(abs(lhs - rhs))))
    return tuple(out)


def gaussian_identity_check(t_grid=None, dps: int = 30) -> dict:
    """int e^{2itx - x^2} dx = sqrt(pi) e^{-t^2}; the odd (sine) part vanishes identically."""
    if t_grid is None:
        t_grid = np.linspace(0.0, 5.0, 21)
    with _MP_LOCK:
        rows = _gauss_identity(tuple(float(t) for t in t_grid), dps)
    abs_err = [r[2] for r in rows]
    rel_err = [r[2] / r[1] for r in rows if r[1] > 0]
    return {"t": [float(t) for t in t_grid], "max_abs_error": max(abs_err), "max_rel_error": max(rel_err), "rows": [list(r) for r in rows]}


def cosine_dist_check(theta_grid=None) -> float:
    """min over the grid of (1 - cos th) - 8 dist^2(th/2pi, Z)."""
    if theta_grid is None:
        theta_grid = np.concatenate([np.linspace(-4 * np.pi, 4 * np.pi, 200_001), np.pi * np.arange(-4, 5)])
    th = np.asarray(theta_grid, dtype=float)
    u = th / (2 * np.pi)
    d = np.abs(u - np.rint(u))
    return float(np.min(2 * np.sin(th / 2) ** 2 - 8 * d * d))


# ---- lattice-distance sets -------------------------------------------------------------
@dataclass(frozen=True)
class LatticePieces:
    """On each piece [edges[i], edges[i+1]] the nearest lattice point to x*c is fixed,
    so dist^2(x c, Z^n) = A x^2 - 2 B_i x + C_i exactly."""

    c: np.ndarray
    edges: np.ndarray
    A: float
    B: np.ndarray
    C: np.ndarray

    @classmethod
    def build(cls, c, x_max: float) -> "LatticePieces":
        c = np.asarray(c, dtype=float)
        if not np.any(c):
            raise DomainError("lattice direction must be nonzero")
        bps = [np.array([-x_max, x_max])]
        for ck in c:
            if ck == 0:
                continue
            a = abs(ck) * x_max
            j = np.arange(math.ceil(-a - 0.5), math.floor(a - 0.5) + 1)
            bps.append((j + 0.5) / ck)
        e = np.unique(np.concatenate(bps))
        e = e[(e >= -x_max) & (e <= x_max)]
        mids = (e[:-1] + e[1:]) / 2
        M = np.rint(np.multiply.outer(mids, c))
        return cls(c, e, float(c @ c), M @ c, np.sum(M * M, axis=1))

    def dist2(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.B) - 1)
        return np.maximum(self.A * x * x - 2 * self.B[i] * x + self.C[i], 0.0)

    def _piece_intervals(self, z):
        """Per-piece intervals of {dist <= z}; z may be an array (one row per z)."""
        a, b = self.edges[:-1], self.edges[1:]
        x0 = self.B / self.A
        d2min = np.maximum(self.C - self.B * x0, 0.0)  # value at the vertex
        z = np.asarray(z, dtype=float)[..., None]
        half = np.sqrt(np.maximum(z * z - d2min, 0.0) / self.A)
        lo = np.maximum(x0 - half, a)
        hi = np.minimum(x0 + half, b)
        keep = (z * z >= d2min) & (lo <= hi)
        return lo, hi, keep

    def components(self, z: float) -> np.ndarray:
        """Connected components of {x : dist(x c, Z^n) <= z}, as an (m, 2) array."""
        if z < 0:
            raise DomainError("z must be nonnegative")
        lo, hi, keep = self._piece_intervals(z)
        lo, hi = lo[keep], hi[keep]
        if lo.size == 0:
            return np.zeros((0, 2))
        # merge pieces that touch at a shared edge
        out = [[lo[0], hi[0]]]
        for l, h in zip(lo[1:], hi[1:]):
            if l <= out[-1][1] + 1e-12:
                out[-1][1] = max(out[-1][1], h)
            else:
                out.append([l, h])
        return np.array(out)

    def measure(self, z) -> np.ndarray:
        """Gaussian-weight measure of {dist <= z} for each z (pieces are disjoint, so no merging)."""
        lo, hi, keep = self._piece_intervals(np.atleast_1d(z))
        m = SQRT_PI / 2 * (special.erf(hi) - special.erf(lo))
        return np.sum(np.where(keep, m, 0.0), axis=-1)

    def max_dist(self) -> float:
        return float(math.sqrt(np.max(self.dist2(self.edges))))

    def gaussian_integral(self, fn) -> float:
        """int fn(dist^2(x)) e^{-x^2} dx over the covered range, 8-point Gauss-Legendre per piece."""
        a, b = self.edges[:-1], self.edges[1:]
        reps = np.maximum(np.ceil((b - a) / 0.05).astype(int), 1)  # sub-panels of width <= 0.05
        idx = np.repeat(np.arange(a.size), reps)
        j = np.concatenate([np.arange(r) for r in reps])
        width = (b - a)[idx] / reps[idx]
        lo = a[idx] + j * width
        half = width / 2
        x = (lo + half)[:, None] + half[:, None] * _GX
        d2 = np.maximum(self.A * x * x - 2 * self.B[idx, None] * x + self.C[idx, None], 0.0)
        return float(np.sum(half[:, None] * _GW * fn(d2) * np.exp(-x * x)))


def gaussian_mass(components) -> float:
    comps = np.asarray(components, dtype=float).reshape(-1, 2)
    if comps.size == 0:
        return 0.0
    return float(SQRT_PI / 2 * np.sum(special.erf(comps[:, 1]) - special.erf(comps[:, 0])))


def _pieces_for(alpha, w, eps, R, x_max):
    return LatticePieces.build(w * np.asarray(alpha, dtype=float) / (math.pi * eps * R), x_max)


def interval_structure(scen: PipelineScenario, z: float, w: float, L: float, eps: float | None = None, R: float | None = None) -> dict:
    """Components of I(z) on |x| <= x_max and the short-interval / wide-gap assertions.

    Clusters chain components whose gap is below the predicted separation. The
    dichotomy behind the claim needs 40 z < L_gamma (and z <= gamma/2), so outside
    that range the report is marked not applicable.
    """
    eps = scen.epsilon if eps is None else eps
    R = scen.R if R is None else R
    if w < (scen.delta or 0.0) - 1e-12:
        raise DomainError("w must be at least delta")
    pieces = _pieces_for(scen.alpha.entries, w, eps, R, scen.x_max)
    comps = pieces.components(z)
    max_len = 20 * math.pi * eps * R * z / w
    min_sep = math.pi * eps * R * L / w
    applicable = z <= scen.gamma / 2 and 40 * z < L
    gaps = comps[1:, 0] - comps[:-1, 1] if len(comps) > 1 else np.zeros(0)
    clusters = []
    for lo, hi in comps:
        if clusters and lo - clusters[-1][1] < min_sep:
            clusters[-1][1] = hi
        else:
            clusters.append([lo, hi])
    spans = [h - l for l, h in clusters]
    cl_gaps = [clusters[i + 1][0] - clusters[i][1] for i in range(len(clusters) - 1)]
    tol = 1e-9 * max(1.0, scen.x_max)
    len_ok = all(s <= max_len + tol for s in spans)
    gap_ok = all(g <= max_len + tol or g >= min_sep - tol for g in gaps)
    return {
        "components": comps.tolist(),
        "clusters": clusters,
        "max_len": max(spans) if spans else 0.0,
        "min_gap": min(cl_gaps) if cl_gaps else math.inf,
        "predicted_max_len": max_len,
        "predicted_min_gap": min_sep,
        "applicable": bool(applicable),
        "pass": bool((len_ok and gap_ok) or not applicable),
    }


def mu_measure_bound(scen: PipelineScenario, z: float, w: float, L: float, eps: float | None = None, R: float | None = None) -> tuple[float, float]:
    """(Gaussian-weight measure of I(z), 70 z (eps R/w + 1/L) for z <= gamma/2 and sqrt(pi) beyond)."""
    eps = scen.epsilon if eps is None else eps
    R = scen.R if R is None else R
    pieces = _pieces_for(scen.alpha.entries, w, eps, R, scen.x_max)
    mu = float(pieces.measure(z)[0])
    bound = 70 * z * (eps * R / w + 1 / L) if z <= scen.gamma / 2 else SQRT_PI
    return mu, bound


def phi_integral(alpha, w: float, eps: float, R: float, qtau: float, x_max: float = X_MAX) -> float:
    """Phi(w) = int exp(-(q tau/2) sum_k (1 - cos(t_k x w)) - x^2) dx on |x| <= x_max."""
    t = 2 * np.asarray(alpha, dtype=float) * w / (eps * R)
    freq = float(np.max(np.abs(t)))
    panels = max(64, int(math.ceil(2 * x_max * freq / math.pi)) * 4)
    edges = np.linspace(-x_max, x_max, panels + 1)
    half = (edges[1] - edges[0]) / 2
    x = ((edges[:-1] + edges[1:]) / 2)[:, None] + half * _GX
    x = x.ravel()
    s = np.zeros_like(x)
    for tk in t:
        s += 2 * np.sin(tk * x / 2) ** 2
    return float(np.sum(np.tile(_GW, panels) * half * np.exp(-qtau / 2 * s - x * x)))


def layer_cake_sides(pieces: LatticePieces, qtau: float, nz: int = 4000) -> tuple[float, float]:
    """int exp(-4 q tau d^2) dmu against 8 q tau int_0^inf mu{I(z)} z e^{-4 q tau z^2} dz.

    mu{I(z)} has square-root onsets wherever a new piece enters, so the z integral
    uses a fine trapezoid rule rather than a high-order rule.
    """
    a = 4 * qtau
    lhs = pieces.gaussian_integral(lambda d2: np.exp(-a * d2))
    zmax = pieces.max_dist()
    zs = np.linspace(0.0, zmax, nz + 1)
    mus = np.concatenate([pieces.measure(zs[i : i + 500]) for i in range(0, zs.size, 500)])
    total = float(pieces.measure(zmax + 1e-9)[0])
    rhs = float(integrate.trapezoid(mus * 2 * a * zs * np.exp(-a * zs * zs), zs)) + total * math.exp(-a * zmax * zmax)
    return lhs, rhs


def explicit_J(w, eps, R, L, gamma, qtau) -> float:
    """70 (eps R/w + 1/L) int_0^{gamma/2} 8 q tau z^2 e^{-4 q tau z^2} dz + sqrt(pi) e^{-q tau gamma^2}."""
    a = 4 * qtau
    c = gamma / 2
    A = -c * math.exp(-a * c * c) + SQRT_PI * math.erf(math.sqrt(a) * c) / (2 * math.sqrt(a))
    return 70 * (eps * R / w + 1 / L) * A + SQRT_PI * math.exp(-a * c * c)


def explicit_constant(nu, delta, gamma, qtau) -> float:
    """C with P{|U| < eps R, V >= R} <= C e^{-R} (eps R + 1/L + e^{-q tau gamma^2})."""
    a = 4 * qtau
    c = gamma / 2
    A = -c * math.exp(-a * c * c) + SQRT_PI * math.erf(math.sqrt(a) * c) / (2 * math.sqrt(a))
    return math.e / SQRT_PI * math.exp(nu * nu / 2) * max(70 * A / delta, 70 * A, SQRT_PI)


# ---- Monte Carlo side -------------------------------------------------------------------
def _uv_samples(spec, alpha, beta, n, seed, chunk=2**15):
    n_chunks = -(-n // chunk)
    rngs = spawn(seed, n_chunks)
    U, V = [], []
    a, b = np.asarray(alpha), np.asarray(beta)
    for c in range(n_chunks):
        size = min(chunk, n - c * chunk)
        X = dist._draw(spec, size * a.size, rngs[c]).reshape(size, a.size)
        U.append(X @ a)
        V.append(X @ b)
    return np.concatenate(U), np.concatenate(V)


def _freq(mask, level=0.99):
    k, n = int(np.count_nonzero(mask)), int(mask.size)
    lo, hi = wilson_interval(k, n, level)
    return {"value": k / n, "ci_lo": lo, "ci_hi": hi, "successes": k, "n": n}


def _k_max(nu, beta, tail=1e-12):
    k = 0
    while bernstein_tail(2.0 ** (k + 1), nu, 1.0, beta, prefactor=2.0) > tail:
        k += 1
    return k


def dyadic_decomposition_check(scen: PipelineScenario, U=None, V=None, nu: float | None = None) -> dict:
    """MC of the whole event and of each dyadic piece; the containment is exact sample by sample."""
    if U is None:
        rs = rescale(scen.spec)
        nu = rs.nu
        U, V = _uv_samples(rs.spec, scen.alpha.entries, scen.beta.entries, scen.n_samples, scen.seed)
    eps = scen.epsilon
    aU, aV = np.abs(U), np.abs(V)
    k_max = _k_max(nu, scen.beta)
    whole = aU < eps * aV
    pieces = [aU < eps]
    for k in range(k_max + 1):
        pieces.append((aU < 2.0 ** (k + 1) * eps) & (aV >= 2.0**k) & (aV <= 2.0 ** (k + 1)))
    resid = aV > 2.0 ** (k_max + 1)
    covered = np.logical_or.reduce(pieces + [resid])
    return {
        "whole": _freq(whole),
        "pieces": [_freq(p) for p in pieces],
        "residual": _freq(resid),
        "residual_bound": bernstein_tail(2.0 ** (k_max + 1), nu, 1.0, scen.beta, prefactor=2.0),
        "k_max": k_max,
        "contained": bool(np.all(covered[whole])),
        "sum_pieces": math.fsum(float(p.mean()) for p in pieces),
    }


# ---- full pipeline ----------------------------------------------------------------------------
@dataclass
class PipelineReport:
    scenario: str
    checks: list
    constants: dict
    assembled: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "pass": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "constants": self.constants,
            "assembled": self.assembled,
        }


def _w_values(spec, delta, npts, n_cells=GRID_CELLS):
    """Values of |W| >= delta to take the sup over: the atoms for discrete laws, a grid otherwise."""
    x, w, _ = _law_grid(spec, 0.0, n_cells)
    d, q = _difference(spec, x, w)
    keep = (np.abs(d) >= delta - 1e-12) & (q > 1e-14)
    vals = np.unique(np.abs(d[keep]))
    if spec.finite_support:
        return vals
    return np.linspace(delta, float(vals.max()), npts)


def run_pipeline(scen: PipelineScenario, lcd_result: LcdResult | None = None) -> PipelineReport:
    rs = rescale(scen.spec)
    spec, nu = rs.spec, rs.nu
    if scen.delta is None:
        delta, p = choose_delta(spec)
    else:
        delta, p = scen.delta, _levy_q(spec, scen.delta)
    lres = lcd_result or lcd_normalized(scen.alpha, scen.gamma)
    L = lres.theta_star
    alpha, beta = scen.alpha.entries, scen.beta.entries
    eps, R, gamma = scen.epsilon, scen.R, scen.gamma
    seeds = child_seeds(scen.seed, 3)
    checks: list[InequalityCheck] = []

    checks.append(_le("levy_p_below_one", p, 1.0 - 1e-12, delta=delta))
    # tilt comparison at every distinct beta_k, with phi = 1{|w| > delta}
    for bk in _distinct(beta):
        tc = tilting_check(spec, bk, lambda d: (np.abs(d) > delta).astype(float))
        checks.append(_le("tilting", tc["lhs"], tc["rhs"], 1e-10, t=bk, M=tc["M"], rhs_literal=tc["rhs_literal"], literal_pass=bool(tc["pass_literal"])))
        cc = corollary_check(spec, bk, delta)
        checks.append(_le("tilting_corollary", cc["rhs"], cc["lhs"], 1e-10, t=bk, rhs_literal=cc["rhs_literal"], literal_pass=bool(cc["pass_literal"])))
    prod_M = float(np.prod([float(dist.mgf(spec, bk)) for bk in beta]))
    checks.append(_le("mgf_product", prod_M, math.exp(nu * nu / 2), 1e-12, nu=nu))
    checks.append(_le("cosine_dist", 0.0, cosine_dist_check(), 1e-12))
    gi = gaussian_identity_check()
    checks.append(_le("gaussian_identity", gi["max_abs_error"], 1e-10, max_rel_error=gi["max_rel_error"]))

    q, tau = measure_q_tau(spec, beta, delta)
    qtau = q * tau
    if not (q > 0 and tau > 0 and math.isfinite(tau)):
        raise NumericError(f"measured q={q}, tau={tau}; cannot continue the chain")

    U, V = _uv_samples(spec, alpha, beta, scen.n_samples, seeds[0])
    aU = np.abs(U)

    # Markov + Gaussian identity, then the tilt comparison, at the scenario's (eps, R)
    cfi = cf_product_integral(spec, alpha, beta, eps, R, nu, scen.x_max, scen.epsabs)
    mc_i, mc_se = cf_integral_mc(spec, alpha, beta, eps, R, 20_000, seeds[1])
    checks.append(_le("cf_integral_range", cfi.value, SQRT_PI * math.exp(nu * nu / 2), 1e-12))
    checks.append(_le("cf_integral_vs_mc", abs(cfi.value - mc_i), 4 * mc_se + 1e-9, mc=mc_i, se=mc_se))
    event = _freq((aU < eps * R) & (V >= R))
    chain12 = math.e ** (1 - R) / SQRT_PI * cfi.prod_M * cfi.value
    checks.append(_le("markov_fourier", event["value"], chain12, ci_hi=event["ci_hi"]))

    w_vals = _w_values(spec, delta, scen.w_points)
    phis = np.array([phi_integral(alpha, w, eps, R, qtau, scen.x_max) for w in w_vals])
    sup_phi = float(phis.max())
    checks.append(_le("cf_to_cosines", cfi.value, sup_phi, 1e-9, q=q, tau=tau))
    chain13 = math.e ** (1 - R) / SQRT_PI * cfi.prod_M * sup_phi
    checks.append(_le("cosine_display", event["value"], chain13, ci_hi=event["ci_hi"]))

    # lattice-distance steps at a few w
    sel = sorted(set([0, len(w_vals) // 2, len(w_vals) - 1]))
    z_top = min(gamma / 2, L / 40)
    for j in sel:
        w = float(w_vals[j])
        pcs = _pieces_for(alpha, w, eps, R, scen.x_max)
        xs = np.linspace(-scen.x_max, scen.x_max, 20001)
        t = 2 * alpha * w / (eps * R)
        cos_sum = np.sum(2 * np.sin(np.multiply.outer(xs, t) / 2) ** 2, axis=1)
        checks.append(_le("cosine_sum_pointwise", 0.0, float(np.min(cos_sum - 8 * pcs.dist2(xs))), 1e-9, w=w))
        lc_lhs, lc_rhs = layer_cake_sides(pcs, qtau)
        checks.append(_le("lattice_bound", float(phis[j]), lc_lhs, 1e-9, w=w))
        checks.append(_le("layer_cake", abs(lc_lhs - lc_rhs), 1e-5 * lc_lhs + 1e-10, w=w, lhs_integral=lc_lhs, rhs_integral=lc_rhs))
        checks.append(_le("explicit_J", lc_lhs, explicit_J(w, eps, R, L, gamma, qtau), 1e-9, w=w))
        for z in np.linspace(0, z_top, 6)[1:]:
            st = interval_structure(scen, float(z), w, L)
            checks.append(
                InequalityCheck("interval_structure", st["max_len"], st["predicted_max_len"], st["pass"],
                                {"z": float(z), "w": w, "min_gap": st["min_gap"], "predicted_min_gap": st["predicted_min_gap"], "applicable": st["applicable"]})
            )
        for z in (0.0, gamma / 4, gamma / 2, gamma):
            mu, bd = mu_measure_bound(scen, z, w, L)
            checks.append(_le("mu_measure", mu, min(bd, SQRT_PI) if z > gamma / 2 else bd, 1e-12, z=z, w=w))
            checks.append(_le("mu_total", mu, SQRT_PI, 1e-12, z=z, w=w))

    # dyadic decomposition with the explicit chain bound per shell
    dy = dyadic_decomposition_check(scen, U, V, nu)
    checks.append(InequalityCheck("dyadic_containment", dy["whole"]["value"], dy["sum_pieces"] + dy["residual"]["value"], dy["contained"], {}))
    checks.append(_le("dyadic_residual", dy["residual"]["value"], dy["residual_bound"], 0.0))
    shell_tight, calib = [], []
    form = lambda eR: eR + 1 / L + math.exp(-qtau * gamma**2)
    for k in range(dy["k_max"] + 1):
        Rk = 2.0**k
        ci = cf_product_integral(spec, alpha, beta, 2 * eps, Rk, nu, scen.x_max, scen.epsabs)
        tight = 2 * math.e ** (1 - Rk) / SQRT_PI * ci.prod_M * ci.value
        shell_tight.append(tight)
        pc = dy["pieces"][k + 1]
        checks.append(_le("dyadic_piece", pc["value"], tight, 0.0, k=k, ci_hi=pc["ci_hi"]))
        calib.append(pc["value"] / (2 * math.exp(-Rk) * form(2 * eps * Rk)))
    c0 = cf_product_integral(spec, alpha, np.zeros_like(alpha), eps, 1.0, nu, scen.x_max, scen.epsabs)
    small_ball = math.e / SQRT_PI * c0.value  # P{|U| < eps} <= e E exp(-U^2/eps^2)
    checks.append(_le("small_ball_fourier", dy["pieces"][0]["value"], small_ball, 0.0, ci_hi=dy["pieces"][0]["ci_hi"]))
    assembled = small_ball + math.fsum(shell_tight) + dy["residual_bound"]
    checks.append(_le("end_to_end", dy["whole"]["value"], assembled, 0.0, ci_hi=dy["whole"]["ci_hi"]))

    C_exp = explicit_constant(nu, delta, gamma, qtau)
    constants = {
        "rescale_b": rs.b,
        "nu": nu,
        "nu_original": rs.nu_original,
        "delta": delta,
        "p": p,
        "q": q,
        "tau": tau,
        "c": qtau,
        "L_gamma": L,
        "lcd_capped": lres.capped,
        "prod_M": prod_M,
        "C_explicit": C_exp,
        "C_calibrated_shell": max(calib) if calib else 0.0,
        "C_calibrated_total": dy["whole"]["value"] / form(eps),
    }
    assembled_d = {
        "mc_whole": dy["whole"],
        "small_ball_term": small_ball,
        "shell_terms": shell_tight,
        "residual_bound": dy["residual_bound"],
        "bound": assembled,
        "explicit_constant_form": small_ball + 2 * sum(C_exp * math.exp(-(2.0**k)) * form(2 * eps * 2.0**k) for k in range(dy["k_max"] + 1)),
    }
    return PipelineReport(scen.name, checks, constants, assembled_d)


def run_many(scenarios, workers: int = 1) -> list[PipelineReport]:
    """Scenarios are independent; results come back in input order whatever ``workers`` is."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_pipeline, scenarios))
    return [run_pipeline(s) for s in scenarios]

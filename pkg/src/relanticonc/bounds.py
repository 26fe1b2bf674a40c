"""Right-hand sides of the anti-concentration inequalities, with every constant exposed.

Each evaluator returns a :class:`BoundReport` whose ``rhs`` is the exact sum of
its ``terms`` (constants already applied), so a report can always be re-added.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .errors import CapabilityError, ConfigError, DomainError
from .lcd import CoefficientVector, LcdResult, lcd_normalized

THEOREMS = (
    "conjecture",
    "gaussian",
    "subgaussian",
    "subexponential",
    "logconcave",
    "sodin",
    "rv_smallball",
    "bernstein_tail",
    "cauchy_interval",
    "mix_logconcave",
    "mix_uniform",
)
DEFAULT_CONSTANTS = {"C": 1.0, "C_lcd": None, "C_prime": 1.0, "c_prime": 1.0, "C_p": 1.0, "c_p": 0.01}
_NEEDS = {
    "conjecture": ("C",),
    "gaussian": (),
    "logconcave": ("C",),
    "subgaussian": ("C_prime", "c_prime"),
    "subexponential": ("C_prime", "c_prime"),
    "sodin": ("C_prime", "c_prime"),
}
CAVEATS = {
    "mix_logconcave": "conditional step taken as an inequality with the log-concave constant C, not an equality with a fixed 10",
    "mix_uniform": "scale variable is xi = g(H) with H of density g; "
    "E[xi^-2] = int_0^inf (1/(2t^3)) [P{|X|<=t} - 2t f(t)] dt",
}


@dataclass
class BoundReport:
    theorem_id: str
    rhs: float
    terms: dict
    constants: dict
    vacuous: bool = False
    applicable: bool = True
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def recompute(self) -> float:
        return math.fsum(self.terms.values())

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "rhs": self.rhs,
            "terms": dict(sorted(self.terms.items())),
            "constants": dict(sorted(self.constants.items())),
            "vacuous": self.vacuous,
            "applicable": self.applicable,
            "notes": list(self.notes),
            "extra": self.extra,
        }


def _report(theorem_id, terms, constants, **kw) -> BoundReport:
    rhs = math.fsum(terms.values())
    return BoundReport(theorem_id, rhs, terms, dict(constants), vacuous=rhs > 1, **kw)


def _pair(alpha, beta):
    a, b = CoefficientVector.of(alpha), CoefficientVector.of(beta)
    if a.is_zero:
        raise DomainError("alpha must be nonzero")
    if a.n != b.n:
        raise DomainError("alpha and beta must have the same length")
    return a, b


def gaussian_bound(alpha, beta) -> BoundReport:
    """2 ||beta|| / ||alpha|| (standard Gaussian coordinates)."""
    a, b = _pair(alpha, beta)
    return _report("gaussian", {"ratio_term": 2.0 * b.norm / a.norm}, {"C": 2.0})


def cauchy_interval_mass(a: float, ell: float) -> float:
    """Exact standard Cauchy mass of [a - ell, a + ell]."""
    return (math.atan(a + ell) - math.atan(a - ell)) / math.pi


def cauchy_interval_bound(a: float, ell: float, literal: bool = False) -> float:
    """Three-case bound on the Cauchy mass of [a-ell, a+ell]: the minimum of the applicable cases.

    ``literal=True`` uses ell (not 2*ell) in the a+ell<0 case, which is not a valid bound
    for |a+ell| > 1 (e.g. a=-5, ell=0.1).
    """
    if not ell > 0:
        raise DomainError("ell must be positive")
    cands = [2 * ell / math.pi]
    if a - ell > 0:
        cands.append(2 * ell / (math.pi * (a - ell) ** 2))
    if a + ell < 0:
        cands.append((ell if literal else 2 * ell) / (math.pi * (a + ell) ** 2))
    return min(cands)


def rv_smallball_bound(epsilon: float, lcd_value: float, gamma: float, C_p: float = 1.0, c_p: float = 0.01) -> BoundReport:
    """C_p (eps + 1/LCD + exp(-c_p gamma^2)); an infinite LCD drops its term."""
    if not (epsilon >= 0 and lcd_value > 0 and gamma > 0 and C_p > 0 and c_p > 0):
        raise DomainError("rv_smallball_bound inputs must be positive")
    terms = {
        "eps_term": C_p * epsilon,
        "lcd_term": 0.0 if math.isinf(lcd_value) else C_p / lcd_value,
        "gamma_term": C_p * math.exp(-c_p * gamma * gamma),
    }
    return _report("rv_smallball", terms, {"C_p": C_p, "c_p": c_p, "gamma": gamma, "epsilon": epsilon})


def _inverse_lcd(a, gamma, lcd_result, lcd_value):
    if lcd_value is not None:
        return (0.0 if math.isinf(lcd_value) else 1.0 / lcd_value), {"theta_star": lcd_value, "override": True}
    res = lcd_result if lcd_result is not None else lcd_normalized(a, gamma)
    return res.inverse, res.to_dict()


def theorem_bound(
    theorem_id: str,
    alpha,
    beta,
    gamma: float | None = None,
    constants: dict | None = None,
    lcd_result: LcdResult | None = None,
    lcd_value: float | None = None,
) -> BoundReport:
    """RHS of the conjecture or one of the theorems for the pair (alpha, beta).

    The LCD enters as LCD_gamma(alpha/||alpha||); a capped search contributes 1/cap.
    ``lcd_value`` overrides the search (math.inf drops the term).
    """
    if theorem_id not in _NEEDS:
        raise ConfigError(f"theorem_bound does not handle {theorem_id!r}", key="theorem")
    a, b = _pair(alpha, beta)
    consts = dict(DEFAULT_CONSTANTS)
    if constants:
        unknown = set(constants) - set(DEFAULT_CONSTANTS) - {"gamma"}
        if unknown:
            raise ConfigError(f"unknown constant(s) {sorted(unknown)}", key=f"constants.{sorted(unknown)[0]}")
        consts.update({k: (None if v is None else float(v)) for k, v in constants.items() if k != "gamma"})
    for k in _NEEDS[theorem_id]:
        if consts.get(k) is None:
            raise ConfigError(f"missing constant {k}", key=f"constants.{k}")
    if gamma is None:
        gamma = math.sqrt(a.n)
    ratio = b.norm / a.norm
    used = {k: consts[k] for k in _NEEDS[theorem_id]}

    if theorem_id == "gaussian":
        return gaussian_bound(a, b)
    if theorem_id == "logconcave":
        return _report("logconcave", {"ratio_term": consts["C"] * ratio}, used)

    inv_lcd, lcd_info = _inverse_lcd(a, gamma, lcd_result, lcd_value)
    used = {**used, "gamma": float(gamma)}
    if theorem_id == "conjecture":
        # C_lcd (default C) weights the LCD term; C_lcd = 0 gives the ratio-only bound
        c_lcd = consts["C"] if consts["C_lcd"] is None else consts["C_lcd"]
        used["C_lcd"] = c_lcd
        terms = {"ratio_term": consts["C"] * ratio, "lcd_term": c_lcd * inv_lcd}
        return _report("conjecture", terms, used, extra={"lcd": lcd_info})

    Cp, cp = consts["C_prime"], consts["c_prime"]
    gamma_term = Cp * math.exp(-cp * gamma * gamma)
    if theorem_id == "sodin":
        terms = {"ratio_term": Cp * ratio, "lcd_term": Cp * inv_lcd, "gamma_term": gamma_term}
        return _report("sodin", terms, used, extra={"lcd": lcd_info})

    # log-factor variants need ||alpha|| > ||beta|| > 0
    if not (0 < b.norm < a.norm):
        return BoundReport(theorem_id, 1.0, {"trivial": 1.0}, used, vacuous=True, notes=["||alpha|| > ||beta|| > 0 fails; trivial bound 1"])
    log_factor = math.log(a.norm / b.norm)
    factor = math.sqrt(log_factor) if theorem_id == "subgaussian" else log_factor
    terms = {"ratio_term": Cp * ratio * factor, "lcd_term": Cp * inv_lcd, "gamma_term": gamma_term}
    return _report(theorem_id, terms, used, extra={"lcd": lcd_info})


def bernstein_tail(t0: float, nu: float, b: float, beta, prefactor: float = 1.0) -> float:
    """Two-regime tail bound for |<beta,X>| with (nu*, b*) = (nu ||beta||, b beta_max).

    With ``prefactor=1`` this is the one-sided Chernoff bound applied to |.|; a
    two-sided statement valid for every beta needs ``prefactor=2``.
    """
    bv = CoefficientVector.of(beta)
    if not (t0 >= 0 and nu > 0 and b > 0) or bv.is_zero:
        raise DomainError("need t0 >= 0, nu > 0, b > 0 and beta nonzero")
    nu_s, b_s = nu * bv.norm, b * bv.max_abs
    if t0 <= nu_s**2 / b_s:
        return prefactor * math.exp(-(t0**2) / (2 * nu_s**2))
    return prefactor * math.exp(-t0 / (2 * b_s))


def orthogonal_reduce(alpha, beta) -> tuple[float, CoefficientVector]:
    """Write beta = a*alpha + gamma with <alpha, gamma> = 0."""
    a, b = CoefficientVector.of(alpha), CoefficientVector.of(beta)
    if a.is_zero:
        raise DomainError("alpha must be nonzero")
    coef = float(np.dot(a.entries, b.entries)) / a.norm**2
    return coef, CoefficientVector.of(b.entries - coef * a.entries)


# ---- mixtures -------------------------------------------------------------------
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _composite_nodes(lo: float, hi: float, panels: int):
    """Composite 16-point Gauss-Legendre nodes and weights on [lo, hi]."""
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    return (mid + half * _GL_X).ravel(), (half * _GL_W).ravel()


_U, _UW = _composite_nodes(0.0, 1.0, 128)


def _half_mass_defect(f, t):
    """P{|X| <= t} - 2 t f(t) = 2 t int_0^1 (f(tu) - f(t)) du, vectorized over t.

    The difference form avoids cancelling two nearly equal masses when t is small.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ft = f(t)
    fu = f(np.multiply.outer(t, _U))
    return 2.0 * t * ((fu - ft[:, None]) @ _UW)


def _shell_integral(fn, k_max: int = 40, upper: bool = True):
    """int_0^inf fn(t) dt over dyadic shells; divergence at 0 is read off the shell decay.

    ``fn`` is vectorized. Returns (value, converged). Mass below the last shell is
    extrapolated geometrically from the fitted decay rate.
    """
    y, w = _composite_nodes(0.0, 1.0, 4)
    ln2 = math.log(2.0)

    def shell(k):
        # t = 2^(k + y) on the shell [2^k, 2^(k+1)], dt = t ln2 dy
        t = 2.0 ** (k + y)
        return float(np.dot(fn(t) * t * ln2, w))

    top = math.fsum(shell(k) for k in range(0, 40)) if upper else 0.0
    shells = np.array([shell(-k - 1) for k in range(k_max)])
    last = shells[-10:]
    scale = max(float(np.max(np.abs(shells))), 1e-300)
    if np.all(np.abs(last) <= 1e-13 * scale):
        return float(top + math.fsum(shells)), True
    pos = np.maximum(np.abs(last), 1e-300)
    rate = math.exp(np.polyfit(np.arange(len(pos)), np.log(pos), 1)[0])
    if rate >= 0.98:
        return math.inf, False
    return float(top + math.fsum(shells) + last[-1] * rate / (1 - rate)), True


def inverse_scale_moment(f) -> tuple[float, bool]:
    """E[xi^-2] of the layered representation of f, via the corrected identity."""
    return _shell_integral(lambda t: _half_mass_defect(f, t) / (2.0 * t**3))


def _scale_law_moment(law: dist.DistributionSpec, k: float) -> tuple[float, bool]:
    if law.finite_support:
        v, q = law.support()
        return float(np.dot(q, v**k)), True
    if law.family == "uniform":
        lo, hi = law.params["lo"], law.params["hi"]
        if k <= -1 and lo == 0:
            return math.inf, False
        if k == -1:
            return math.log(hi / lo) / (hi - lo), True
        return (hi ** (k + 1) - lo ** (k + 1)) / ((k + 1) * (hi - lo)), True
    raise CapabilityError(f"moments of scale law {law.describe()} are not available")


def mixture_bounds(corollary_id: str, source, alpha, beta, C: float = 1.0) -> BoundReport:
    """Bounds for scale mixtures of log-concave laws and for symmetric unimodal densities.

    ``mix_logconcave``: ``source`` is a scale-mixture spec or a dict with E_xi2 and E_xi_inv2.
    ``mix_uniform``: ``source`` is a spec with a symmetric unimodal density, or a callable density.
    """
    a, b = _pair(alpha, beta)
    ratio = b.norm / a.norm
    notes = [CAVEATS[corollary_id]] if corollary_id in CAVEATS else []
    if corollary_id == "mix_logconcave":
        if isinstance(source, dist.DistributionSpec):
            if source.family != "scale-mixture":
                raise ConfigError("mix_logconcave needs a scale-mixture law", key="dist.family")
            base = source.params["base"]
            if not (base.logconcave and base.symmetric):
                raise CapabilityError("base law must be symmetric log-concave")
            m2, ok2 = _scale_law_moment(source.params["scale_law"], 2)
            mi2, oki = _scale_law_moment(source.params["scale_law"], -2)
        else:
            m2, mi2 = float(source["E_xi2"]), float(source["E_xi_inv2"])
            ok2, oki = math.isfinite(m2), math.isfinite(mi2)
        moments = {"E_xi2": m2, "E_xi_inv2": mi2}
        if not (ok2 and oki):
            return BoundReport(corollary_id, math.inf, {"ratio_term": math.inf}, {"C": C}, vacuous=True, applicable=False, notes=notes + ["a scale moment diverges"], extra=moments)
        B = max(m2, mi2)
        return _report(corollary_id, {"ratio_term": C * B * ratio}, {"C": C, "B": B}, notes=notes, extra=moments)

    if corollary_id != "mix_uniform":
        raise ConfigError(f"unknown corollary {corollary_id!r}", key="corollary")
    if isinstance(source, dist.DistributionSpec):
        spec = source
        if not (spec.has_density and spec.symmetric):
            raise CapabilityError("mix_uniform needs a symmetric density")
        f = lambda x, _s=spec: np.asarray(dist.density(_s, x), dtype=float)
    else:
        f = np.vectorize(lambda x: float(source(x)), otypes=[float])
    second = 2 * _shell_integral(lambda t: t * t * f(t))[0]
    inv, ok = inverse_scale_moment(f)
    stated, _ = _shell_integral(lambda t: _half_mass_defect(f, t) / t**3, upper=False)
    proof_form, proof_ok = _shell_integral(lambda t: 2.0 / t**3 * (_half_mass_defect(f, t) + t * f(t)))
    extra = {
        "second_moment": second,
        "E_xi2": 12 * second,
        "E_xi_inv2": inv,
        "stated_integral": stated,
        "proof_integral": proof_form if proof_ok else math.inf,
    }
    if not ok:
        return BoundReport(
            corollary_id, math.inf, {"ratio_term": math.inf}, {"C": C}, vacuous=True, applicable=False,
            notes=notes + ["E[xi^-2] diverges: density too sharply peaked at 0"], extra=extra,
        )
    B = max(second, inv)
    return _report(corollary_id, {"ratio_term": 12 * C * B * ratio}, {"C": C, "B": B}, notes=notes, extra=extra)

"""One-dimensional laws: samplers, densities, characteristic functions, MGFs,
exponential tilts, symmetrized differences and the layered (uniform-mixture)
representation of symmetric unimodal densities.

A law is a :class:`DistributionSpec`, a family name plus a parameter map.
Evaluators are stateless; samplers take an explicit seed or Generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special, stats

from .errors import CapabilityError, ConfigError, DomainError, ShapeError
from .rng import make_rng

FAMILIES = (
    "gaussian",
    "rademacher",
    "finite-discrete",
    "laplace",
    "exponential-power",
    "uniform",
    "scale-mixture",
    "difference",
)
CONTINUOUS = ("gaussian", "laplace", "exponential-power", "uniform")
_PARAMS = {
    "gaussian": {"sigma"},
    "rademacher": set(),
    "finite-discrete": {"support"},
    "laplace": {"b"},
    "exponential-power": {"p", "scale"},
    "uniform": {"lo", "hi"},
    "scale-mixture": {"base", "scale_law"},
    "difference": {"base"},
}
# filled in by from_config when a scale parameter is omitted
_DEFAULTS = {"gaussian": {"sigma": 1.0}, "laplace": {"b": 1.0}, "exponential-power": {"scale": 1.0}}
QUAD_EPSABS = 1e-10


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """A 1D law: ``family`` plus ``params``. Use the constructor helpers below."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        fam = self.family
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {fam!r}", key="family")
        extra = set(self.params) - _PARAMS[fam]
        if extra:
            raise ConfigError(f"unknown parameter(s) {sorted(extra)} for {fam}", key=sorted(extra)[0])
        missing = _PARAMS[fam] - set(self.params)
        if missing:
            raise ConfigError(f"missing parameter(s) {sorted(missing)} for {fam}", key=sorted(missing)[0])
        p = self.params
        if fam == "gaussian" and not p["sigma"] > 0:
            raise ConfigError("sigma must be positive", key="sigma")
        if fam == "laplace" and not p["b"] > 0:
            raise ConfigError("b must be positive", key="b")
        if fam == "exponential-power" and not (p["p"] > 0 and p["scale"] > 0):
            raise ConfigError("p and scale must be positive", key="p")
        if fam == "uniform" and not p["lo"] < p["hi"]:
            raise ConfigError("need lo < hi", key="lo")
        if fam == "finite-discrete":
            sup = p["support"]
            if len(sup) == 0:
                raise ConfigError("empty support", key="support")
            probs = [float(q) for _, q in sup]
            if min(probs) <= 0:
                raise ConfigError("probabilities must be positive", key="support")
            if abs(math.fsum(probs) - 1.0) > 1e-12:
                raise ConfigError(f"probabilities sum to {math.fsum(probs)!r}, not 1", key="support")
        if fam == "scale-mixture":
            base, law = p["base"], p["scale_law"]
            if not isinstance(base, DistributionSpec) or not isinstance(law, DistributionSpec):
                raise ConfigError("base and scale_law must be distributions", key="base")
            if not _positive_support(law):
                raise ConfigError("scale law must be supported on the positive reals", key="scale_law")
        if fam == "difference" and not isinstance(p["base"], DistributionSpec):
            raise ConfigError("base must be a distribution", key="base")

    # ---- capability flags -------------------------------------------------
    @property
    def finite_support(self) -> bool:
        if self.family in ("rademacher", "finite-discrete"):
            return True
        if self.family == "scale-mixture":
            return self.params["base"].finite_support and self.params["scale_law"].finite_support
        if self.family == "difference":
            return self.params["base"].finite_support
        return False

    @property
    def has_density(self) -> bool:
        if self.family in CONTINUOUS:
            return True
        if self.family in ("scale-mixture", "difference"):
            return self.params["base"].has_density
        return False

    @property
    def sampleable(self) -> bool:
        return True

    @property
    def has_cf(self) -> bool:
        return True

    @property
    def has_mgf(self) -> bool:
        return mgf_radius(self) > 0

    @property
    def symmetric(self) -> bool:
        fam = self.family
        if fam in ("gaussian", "rademacher", "laplace", "exponential-power", "difference"):
            return True
        if fam == "uniform":
            return abs(self.params["lo"] + self.params["hi"]) <= 1e-15 * abs(self.params["hi"])
        if fam == "finite-discrete":
            vals, probs = self.support()
            lookup = dict(zip(np.round(vals, 12), probs))
            return all(abs(lookup.get(round(-v, 12), 0.0) - q) <= 1e-12 for v, q in zip(vals, probs))
        if fam == "scale-mixture":
            return self.params["base"].symmetric
        return False

    @property
    def logconcave(self) -> bool:
        """Has a log-concave density (non-degenerate)."""
        fam = self.family
        if fam in ("gaussian", "laplace", "uniform"):
            return True
        if fam == "exponential-power":
            return self.params["p"] >= 1
        return False

    @property
    def subgaussian(self) -> bool:
        fam = self.family
        if fam in ("gaussian", "rademacher", "finite-discrete", "uniform"):
            return True
        if fam == "exponential-power":
            return self.params["p"] >= 2
        if fam in ("scale-mixture",):
            law = self.params["scale_law"]
            return self.params["base"].subgaussian and _bounded(law)
        if fam == "difference":
            return self.params["base"].subgaussian
        return False

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted (values, probabilities) of a finite-support law, duplicates merged."""
        if self.family == "rademacher":
            return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
        if self.family == "finite-discrete":
            vals = np.array([float(v) for v, _ in self.params["support"]])
            probs = np.array([float(q) for _, q in self.params["support"]])
            return _merge_atoms(vals, probs)
        if self.finite_support:
            return symmetrized_difference(self.params["base"]).support() if self.family == "difference" else _mixture_atoms(self)
        raise CapabilityError(f"{self.describe()} does not have finite support")

    # ---- (de)serialization ------------------------------------------------
    def to_config(self) -> dict:
        out: dict = {"family": self.family}
        for k in sorted(self.params):
            v = self.params[k]
            if isinstance(v, DistributionSpec):
                out[k] = v.to_config()
            elif k == "support":
                out[k] = [[float(a), float(q)] for a, q in v]
            else:
                out[k] = float(v)
        return out

    @classmethod
    def from_config(cls, cfg, key: str = "dist") -> "DistributionSpec":
        if isinstance(cfg, str):
            return parse_inline(cfg)
        if not isinstance(cfg, dict) or "family" not in cfg:
            raise ConfigError("distribution config must be a mapping with a 'family' key", key=key)
        fam = cfg["family"]
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {fam!r}", key=f"{key}.family")
        params = dict(_DEFAULTS.get(fam, {}))
        for k, v in cfg.items():
            if k == "family":
                continue
            if k not in _PARAMS[fam]:
                raise ConfigError(f"unknown parameter for {fam}", key=f"{key}.{k}")
            if k in ("base", "scale_law"):
                params[k] = cls.from_config(v, key=f"{key}.{k}")
            elif k == "support":
                try:
                    params[k] = tuple((float(a), float(q)) for a, q in v)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"support must be a list of [value, prob] pairs ({exc})", key=f"{key}.{k}")
            else:
                try:
                    params[k] = float(v)
                except (TypeError, ValueError):
                    raise ConfigError(f"expected a number, got {v!r}", key=f"{key}.{k}")
        try:
            return cls(fam, params)
        except ConfigError as exc:
            raise ConfigError(str(exc).split(": ", 1)[-1], key=f"{key}.{exc.key}" if exc.key else key) from None

    def describe(self) -> str:
        def fmt(v):
            if isinstance(v, DistributionSpec):
                return v.describe()
            if isinstance(v, tuple):
                return "[" + ",".join(f"({a:g}:{q:g})" for a, q in v) + "]"
            return f"{v:g}"

        inner = ",".join(f"{k}={fmt(self.params[k])}" for k in sorted(self.params))
        return f"{self.family}({inner})"

    def __eq__(self, other):
        return isinstance(other, DistributionSpec) and self.to_config() == other.to_config()

    def __hash__(self):
        return hash(self.describe())


# ---- constructors -----------------------------------------------------------
def gaussian(sigma: float = 1.0) -> DistributionSpec:
    return DistributionSpec("gaussian", {"sigma": float(sigma)})


def rademacher() -> DistributionSpec:
    return DistributionSpec("rademacher", {})


def finite_discrete(support) -> DistributionSpec:
    return DistributionSpec("finite-discrete", {"support": tuple((float(v), float(q)) for v, q in support)})


def point_mass(c: float = 0.0) -> DistributionSpec:
    return finite_discrete([(c, 1.0)])


def laplace(b: float = 1.0) -> DistributionSpec:
    return DistributionSpec("laplace", {"b": float(b)})


def exponential_power(p: float, scale: float = 1.0) -> DistributionSpec:
    return DistributionSpec("exponential-power", {"p": float(p), "scale": float(scale)})


def uniform(lo: float, hi: float) -> DistributionSpec:
    return DistributionSpec("uniform", {"lo": float(lo), "hi": float(hi)})


def scale_mixture(base: DistributionSpec, scale_law: DistributionSpec) -> DistributionSpec:
    return DistributionSpec("scale-mixture", {"base": base, "scale_law": scale_law})


def parse_inline(text: str) -> DistributionSpec:
    """Parse ``family`` or ``family:k=v,k=v`` (e.g. ``laplace:b=0.7071``)."""
    name, _, rest = text.strip().partition(":")
    if name not in FAMILIES:
        raise ConfigError(f"unknown family {name!r}", key="dist.family")
    cfg: dict = {"family": name}
    if rest:
        for item in rest.split(","):
            k, eq, v = item.partition("=")
            if not eq:
                raise ConfigError(f"expected key=value, got {item!r}", key="dist")
            cfg[k.strip()] = v.strip()
    return DistributionSpec.from_config(cfg)


def scaled(spec: DistributionSpec, c: float) -> DistributionSpec:
    """Law of c*X for c > 0."""
    if not c > 0:
        raise DomainError("scale factor must be positive")
    fam, p = spec.family, spec.params
    if fam == "gaussian":
        return gaussian(p["sigma"] * c)
    if fam == "rademacher":
        return finite_discrete([(-c, 0.5), (c, 0.5)])
    if fam == "finite-discrete":
        return finite_discrete([(v * c, q) for v, q in p["support"]])
    if fam == "laplace":
        return laplace(p["b"] * c)
    if fam == "exponential-power":
        return exponential_power(p["p"], p["scale"] * c)
    if fam == "uniform":
        return uniform(p["lo"] * c, p["hi"] * c)
    if fam == "scale-mixture":
        return scale_mixture(scaled(p["base"], c), p["scale_law"])
    return DistributionSpec("difference", {"base": scaled(p["base"], c)})


# ---- helpers ------------------------------------------------------------------
def _merge_atoms(vals, probs, decimals: int = 12):
    order = np.argsort(vals, kind="stable")
    vals, probs = np.asarray(vals, float)[order], np.asarray(probs, float)[order]
    keys = np.round(vals, decimals)
    uniq, inv = np.unique(keys, return_inverse=True)
    merged = np.zeros(len(uniq))
    np.add.at(merged, inv, probs)
    first = np.zeros(len(uniq))
    first[inv[::-1]] = vals[::-1]
    return first, merged


def _mixture_atoms(spec):
    bv, bp = spec.params["base"].support()
    sv, sp = spec.params["scale_law"].support()
    return _merge_atoms(np.outer(sv, bv).ravel(), np.outer(sp, bp).ravel())


def _positive_support(law: DistributionSpec) -> bool:
    if law.finite_support:
        return bool(np.all(law.support()[0] > 0))
    if law.family == "uniform":
        return law.params["lo"] >= 0
    if law.family == "scale-mixture":
        return _positive_support(law.params["base"])
    return False


def _bounded(law: DistributionSpec) -> bool:
    return law.finite_support or law.family == "uniform"


def _ess_sup(law: DistributionSpec) -> float:
    if law.finite_support:
        return float(np.max(np.abs(law.support()[0])))
    if law.family == "uniform":
        return max(abs(law.params["lo"]), abs(law.params["hi"]))
    return math.inf


@lru_cache(maxsize=None)
def _exppow_const(p: float, scale: float) -> float:
    # normalizing constant by quadrature (same path for every p)
    val, _ = integrate.quad(lambda x: math.exp(-((x / scale) ** p)), 0, math.inf, epsabs=1e-13, epsrel=1e-13, limit=200)
    return 1.0 / (2.0 * val)


def _expect_over(law: DistributionSpec, g: Callable[[float], np.ndarray]):
    """E[g(xi)] for a positive scale law."""
    if law.finite_support:
        vals, probs = law.support()
        return sum(q * g(v) for v, q in zip(vals, probs))
    if law.family == "uniform":
        lo, hi = law.params["lo"], law.params["hi"]
        nodes, weights = np.polynomial.legendre.leggauss(200)
        xs = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        return sum(0.5 * w * g(x) for x, w in zip(xs, weights))
    raise CapabilityError(f"cannot integrate over scale law {law.describe()}")


def _continuous_range(spec: DistributionSpec) -> tuple[float, float]:
    if spec.family == "uniform":
        return spec.params["lo"], spec.params["hi"]
    return -math.inf, math.inf


# ---- pointwise evaluators -----------------------------------------------------
def density(spec: DistributionSpec, x):
    x = np.asarray(x, dtype=float)
    fam, p = spec.family, spec.params
    if fam == "gaussian":
        return stats.norm.pdf(x, scale=p["sigma"])
    if fam == "laplace":
        return np.exp(-np.abs(x) / p["b"]) / (2 * p["b"])
    if fam == "exponential-power":
        return _exppow_const(p["p"], p["scale"]) * np.exp(-np.abs(x / p["scale"]) ** p["p"])
    if fam == "uniform":
        lo, hi = p["lo"], p["hi"]
        return np.where((x >= lo) & (x <= hi), 1.0 / (hi - lo), 0.0)
    if fam == "scale-mixture" and spec.has_density:
        base = p["base"]
        return _expect_over(p["scale_law"], lambda s: density(base, x / s) / s)
    if fam == "difference" and spec.has_density:
        base = p["base"]
        lo, hi = _continuous_range(base)

        def one(xv):
            val, _ = integrate.quad(lambda y: float(density(base, xv + y) * density(base, y)), lo, hi, limit=200)
            return val

        return np.vectorize(one, otypes=[float])(x)
    raise CapabilityError(f"{spec.describe()} has no density")


def log_density(spec: DistributionSpec, x):
    x = np.asarray(x, dtype=float)
    fam, p = spec.family, spec.params
    if fam == "gaussian":
        return stats.norm.logpdf(x, scale=p["sigma"])
    if fam == "laplace":
        return -np.abs(x) / p["b"] - math.log(2 * p["b"])
    if fam == "exponential-power":
        return math.log(_exppow_const(p["p"], p["scale"])) - np.abs(x / p["scale"]) ** p["p"]
    with np.errstate(divide="ignore"):
        return np.log(density(spec, x))


def _weighted(spec, t: float, dens=None):
    """x -> exp(t x) * density(x), evaluated in log space."""
    if dens is None:
        return lambda x: math.exp(t * x + float(log_density(spec, x)))
    return lambda x: math.exp(t * x + math.log(max(float(dens(x)), 1e-300))) if float(dens(x)) > 0 else 0.0


def cdf(spec: DistributionSpec, x):
    x = np.asarray(x, dtype=float)
    fam, p = spec.family, spec.params
    if spec.finite_support:
        vals, probs = spec.support()
        return np.sum(probs * (vals <= x[..., None]), axis=-1)
    if fam == "gaussian":
        return stats.norm.cdf(x, scale=p["sigma"])
    if fam == "laplace":
        return np.where(x < 0, 0.5 * np.exp(x / p["b"]), 1 - 0.5 * np.exp(-x / p["b"]))
    if fam == "uniform":
        return np.clip((x - p["lo"]) / (p["hi"] - p["lo"]), 0.0, 1.0)
    if fam == "exponential-power":
        def one(xv):
            half, _ = integrate.quad(lambda u: float(density(spec, u)), 0, abs(xv), epsabs=1e-13, limit=200)
            return 0.5 + math.copysign(half, xv)

        return np.vectorize(one, otypes=[float])(x)
    if fam == "scale-mixture":
        base = p["base"]
        return _expect_over(p["scale_law"], lambda s: cdf(base, x / s))
    if fam == "difference":
        base = p["base"]
        lo, hi = _continuous_range(base)

        def one(xv):
            val, _ = integrate.quad(lambda y: float(density(base, y) * cdf(base, xv + y)), lo, hi, limit=200)
            return val

        return np.vectorize(one, otypes=[float])(x)
    raise CapabilityError(f"{spec.describe()} has no cdf")


def mgf_radius(spec: DistributionSpec) -> float:
    """Supremum of |t| for which E[exp(tX)] is finite (0 if unknown)."""
    fam, p = spec.family, spec.params
    if fam in ("gaussian", "uniform") or spec.finite_support:
        return math.inf
    if fam == "laplace":
        return 1.0 / p["b"]
    if fam == "exponential-power":
        if p["p"] > 1:
            return math.inf
        return 1.0 / p["scale"] if p["p"] == 1 else 0.0
    if fam == "scale-mixture":
        sup = _ess_sup(p["scale_law"])
        return mgf_radius(p["base"]) / sup if math.isfinite(sup) else 0.0
    if fam == "difference":
        return mgf_radius(p["base"])
    return 0.0


def _check_mgf_domain(spec, t):
    r = mgf_radius(spec)
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) >= r):
        raise CapabilityError(f"MGF of {spec.describe()} diverges at |t| >= {r:g}")


def cf_complex(spec: DistributionSpec, z):
    """E[exp(i z X)] for complex z (analytic continuation inside the MGF strip)."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag != 0):
        _check_mgf_domain(spec, z.imag)
    fam, p = spec.family, spec.params
    if spec.finite_support:
        vals, probs = spec.support()
        return np.sum(probs * np.exp(1j * z[..., None] * vals), axis=-1)
    if fam == "gaussian":
        return np.exp(-0.5 * (p["sigma"] * z) ** 2)
    if fam == "laplace":
        return 1.0 / (1.0 + (p["b"] * z) ** 2)
    if fam == "uniform":
        lo, hi = p["lo"], p["hi"]
        out = np.ones_like(z)
        nz = np.abs(z) > 1e-12
        zz = z[nz]
        out[nz] = (np.exp(1j * zz * hi) - np.exp(1j * zz * lo)) / (1j * zz * (hi - lo))
        return out
    if fam == "scale-mixture":
        base = p["base"]
        return _expect_over(p["scale_law"], lambda s: cf_complex(base, z * s))
    if fam == "difference":
        base = p["base"]
        return cf_complex(base, z) * cf_complex(base, -z)
    # exponential-power: quadrature of the density
    return np.vectorize(lambda zz: _quad_cf(spec, zz), otypes=[complex])(z)


def _quad_cf(spec, z: complex) -> complex:
    lam, t = z.real, -z.imag  # exp(izx) = exp(t x) * exp(i lam x)
    f = lambda x: float(density(spec, x))
    if t == 0.0:
        if lam == 0.0:
            return complex(1.0)  # a probability law; the normalizer is exact by construction
        # symmetric law: imaginary part vanishes
        re = 2 * integrate.quad(f, 0, math.inf, weight="cos", wvar=abs(lam))[0]
        return complex(re)
    re = 0.0
    im = 0.0
    for lo, hi in ((-math.inf, 0.0), (0.0, math.inf)):
        re += integrate.quad(lambda x: math.exp(t * x) * math.cos(lam * x) * f(x), lo, hi, limit=400, epsabs=1e-12)[0]
        im += integrate.quad(lambda x: math.exp(t * x) * math.sin(lam * x) * f(x), lo, hi, limit=400, epsabs=1e-12)[0]
    return complex(re, im)


def cf(spec: DistributionSpec, lam):
    return cf_complex(spec, np.asarray(lam, dtype=float))


def mgf(spec: DistributionSpec, t):
    t = np.asarray(t, dtype=float)
    _check_mgf_domain(spec, t)
    fam, p = spec.family, spec.params
    if spec.finite_support:
        vals, probs = spec.support()
        return np.sum(probs * np.exp(t[..., None] * vals), axis=-1)
    if fam == "exponential-power":
        return np.vectorize(lambda tt: _quad_mgf(spec, tt), otypes=[float])(t)
    return np.real(cf_complex(spec, -1j * t))


def _quad_mgf(spec, t: float) -> float:
    if t == 0.0:
        return 1.0
    lo, hi = _continuous_range(spec)
    f = _weighted(spec, t)
    if math.isinf(lo):
        return integrate.quad(f, -math.inf, 0, epsabs=QUAD_EPSABS, limit=400)[0] + integrate.quad(
            f, 0, math.inf, epsabs=QUAD_EPSABS, limit=400
        )[0]
    return integrate.quad(f, lo, hi, epsabs=QUAD_EPSABS, limit=400)[0]


def evaluate(spec: DistributionSpec, what: str, point):
    """Pointwise density, cdf, cf (complex) or mgf."""
    funcs = {"density": density, "cdf": cdf, "cf": cf, "mgf": mgf}
    if what not in funcs:
        raise ConfigError(f"unknown functional {what!r}", key="what")
    out = funcs[what](spec, point)
    return out.item() if np.ndim(out) == 0 else out


def mean(spec: DistributionSpec) -> float:
    if spec.symmetric:
        return 0.0
    if spec.finite_support:
        v, q = spec.support()
        return float(np.dot(v, q))
    if spec.family == "uniform":
        return 0.5 * (spec.params["lo"] + spec.params["hi"])
    raise CapabilityError(f"no mean available for {spec.describe()}")


def variance(spec: DistributionSpec) -> float:
    fam, p = spec.family, spec.params
    if spec.finite_support:
        v, q = spec.support()
        m = np.dot(v, q)
        return float(np.dot((v - m) ** 2, q))
    if fam == "gaussian":
        return p["sigma"] ** 2
    if fam == "laplace":
        return 2 * p["b"] ** 2
    if fam == "uniform":
        return (p["hi"] - p["lo"]) ** 2 / 12
    if fam == "exponential-power":
        return 2 * integrate.quad(lambda x: x * x * float(density(spec, x)), 0, math.inf, epsabs=1e-13)[0]
    if fam == "scale-mixture":
        return variance(p["base"]) * float(_expect_over(p["scale_law"], lambda s: np.asarray(s * s)))
    return 2 * variance(p["base"])


# ---- sampling -----------------------------------------------------------------
def sample(spec: DistributionSpec, n: int, seed) -> np.ndarray:
    """n i.i.d. draws; identical for identical (spec, n, seed)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = make_rng(seed)
    return _draw(spec, int(n), rng)


def _draw(spec, n, rng) -> np.ndarray:
    fam, p = spec.family, spec.params
    if fam == "gaussian":
        return rng.normal(0.0, p["sigma"], n)
    if fam == "rademacher":
        return rng.integers(0, 2, n).astype(float) * 2.0 - 1.0
    if fam == "finite-discrete":
        vals, probs = spec.support()
        if len(vals) == 1:
            return np.full(n, vals[0])
        return vals[rng.choice(len(vals), size=n, p=probs / probs.sum())]
    if fam == "laplace":
        return rng.laplace(0.0, p["b"], n)
    if fam == "exponential-power":
        mag = rng.gamma(1.0 / p["p"], 1.0, n) ** (1.0 / p["p"])
        sign = rng.integers(0, 2, n) * 2.0 - 1.0
        return p["scale"] * mag * sign
    if fam == "uniform":
        return rng.uniform(p["lo"], p["hi"], n)
    if fam == "scale-mixture":
        xi = _draw(p["scale_law"], n, rng)
        return xi * _draw(p["base"], n, rng)
    if fam == "difference":
        return _draw(p["base"], n, rng) - _draw(p["base"], n, rng)
    raise CapabilityError(f"cannot sample {spec.describe()}")


# ---- tilting ------------------------------------------------------------------
@dataclass(frozen=True)
class TiltedDistribution:
    """dF_t(x) = exp(t x) dF(x) / M(t)."""

    base: DistributionSpec
    t: float
    normalizer: float

    @property
    def law(self) -> DistributionSpec:
        """The tilted law as a finite-discrete spec (finite-support bases only)."""
        vals, probs = self.base.support()
        logw = np.log(probs) + self.t * vals
        w = np.exp(logw - special.logsumexp(logw))
        w = w / math.fsum(w)
        return finite_discrete(list(zip(vals, w)))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(log_density(self.base, x) + self.t * x - math.log(self.normalizer))

    def cf(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.t == 0.0:
            return cf_complex(self.base, lam)
        return cf_complex(self.base, lam - 1j * self.t) / self.normalizer

    def mgf(self, s):
        return mgf(self.base, self.t + np.asarray(s, dtype=float)) / self.normalizer

    def tilt(self, s: float) -> "TiltedDistribution":
        """Tilt again by s; the normalizer is recomputed from the tilted law itself."""
        if self.base.finite_support:
            return tilt(self.base, self.t + s)
        m_s = _quad_normalizer(self.density, self.base, s)
        return TiltedDistribution(self.base, self.t + s, self.normalizer * m_s)

    def sample(self, n: int, seed) -> np.ndarray:
        if not self.base.finite_support:
            raise CapabilityError("sampling a tilted continuous law is not supported")
        return sample(self.law, n, seed)


def _discrete_mgf(spec, t):
    vals, probs = spec.support()
    return float(math.fsum(probs * np.exp(t * vals)))


def _quad_normalizer(dens, spec, t: float) -> float:
    lo, hi = _continuous_range(spec)
    f = _weighted(spec, t, dens) if dens is not None else _weighted(spec, t)
    if math.isinf(lo):
        a = integrate.quad(f, -math.inf, 0, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=400)[0]
        b = integrate.quad(f, 0, math.inf, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=400)[0]
        return a + b
    return integrate.quad(f, lo, hi, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=400)[0]


def tilt(spec: DistributionSpec, t: float) -> TiltedDistribution:
    """Exponential tilt. Discrete laws exactly; continuous normalizer by quadrature."""
    t = float(t)
    if abs(t) >= mgf_radius(spec):
        raise CapabilityError(f"MGF of {spec.describe()} is infinite at t={t:g}")
    if t == 0.0:
        return TiltedDistribution(spec, 0.0, 1.0)
    if spec.finite_support:
        return TiltedDistribution(spec, t, _discrete_mgf(spec, t))
    if not spec.has_density:
        raise CapabilityError(f"cannot tilt {spec.describe()}")
    return TiltedDistribution(spec, t, _quad_normalizer(None, spec, t))


# ---- symmetrized difference ---------------------------------------------------
def symmetrized_difference(spec: DistributionSpec) -> DistributionSpec:
    """Law of X - X' for X, X' i.i.d. ``spec``."""
    if spec.finite_support:
        vals, probs = spec.support()
        v, q = _merge_atoms(np.subtract.outer(vals, vals).ravel(), np.outer(probs, probs).ravel())
        q = q / math.fsum(q)
        return finite_discrete(list(zip(v, q)))
    if spec.family == "gaussian":
        return gaussian(spec.params["sigma"] * math.sqrt(2.0))
    return DistributionSpec("difference", {"base": spec})


# ---- discretization ------------------------------------------------------------
def effective_range(spec: DistributionSpec, tail: float = 1e-14) -> float:
    """Half-width x_max beyond which the density is below ``tail`` times its peak."""
    if spec.finite_support:
        return float(np.max(np.abs(spec.support()[0])))
    lo, hi = _continuous_range(spec)
    if math.isfinite(lo):
        return max(abs(lo), abs(hi))
    peak = float(density(spec, 0.0))
    x = 1.0
    while float(density(spec, x) + density(spec, -x)) > tail * peak:
        x *= 1.5
        if x > 1e6:
            raise CapabilityError("density tail too heavy to discretize")
    return x


def discretize(law, h: float | None = None, x_max: float | None = None, n_cells: int = 8001):
    """Nodes and probability weights approximating ``law`` on a grid symmetric about 0.

    ``law`` is a DistributionSpec or TiltedDistribution. Finite-support laws are
    returned exactly. Continuous laws use a uniform grid with node spacing ``h``;
    the symmetric grid keeps symmetric laws exactly symmetric after discretization.
    """
    if isinstance(law, TiltedDistribution):
        x, w = discretize(law.base, h, x_max, n_cells)
        logw = np.log(np.where(w > 0, w, 1e-300)) + law.t * x
        w = np.where(w > 0, np.exp(logw - logw.max()), 0.0)
        return x, w / math.fsum(w)
    if law.finite_support:
        return law.support()
    if x_max is None:
        x_max = effective_range(law)
    if h is None:
        h = 2 * x_max / (n_cells - 1)
    k = int(math.ceil(x_max / h))
    x = h * np.arange(-k, k + 1)
    w = density(law, x) * h
    return x, w / math.fsum(w)


# ---- sub-exponential parameters --------------------------------------------------
@dataclass(frozen=True)
class SubExpParams:
    nu: float
    b: float


def default_subexp_b(spec: DistributionSpec) -> float:
    fam, p = spec.family, spec.params
    if fam == "laplace":
        return 2.0 * p["b"]
    if fam == "exponential-power" and p["p"] == 1:
        return 2.0 * p["scale"]
    r = mgf_radius(spec)
    return 1.0 if math.isinf(r) else 2.0 / r


def measure_subexp(spec: DistributionSpec, b: float | None = None, grid: int = 2001) -> SubExpParams:
    """Smallest nu (on a lambda grid) with log E[e^{lX}] <= l^2 nu^2 / 2 for |l| <= 1/b."""
    if b is None:
        b = default_subexp_b(spec)
    if 1.0 / b >= mgf_radius(spec):
        raise CapabilityError(f"MGF of {spec.describe()} not finite on |lambda| <= 1/b")
    if abs(mean(spec)) > 1e-12:
        raise CapabilityError("sub-exponential parameters require a zero-mean law")
    lam = np.linspace(1.0 / (b * grid), 1.0 / b, grid)
    lam = np.concatenate([-lam[::-1], lam])
    ratio = 2 * np.log(mgf(spec, lam)) / lam**2
    # lambda -> 0 limit is the variance
    nu2 = max(float(ratio.max()), variance(spec))
    return SubExpParams(nu=math.sqrt(nu2) * (1 + 1e-9), b=float(b))


def subexp_violation(spec: DistributionSpec, params: SubExpParams, grid: int = 4001) -> float:
    """max over a grid of log M(l) - l^2 nu^2/2 on |l| <= 1/b (<= 0 means the bound holds)."""
    lam = np.linspace(-1.0 / params.b, 1.0 / params.b, grid)
    return float(np.max(np.log(mgf(spec, lam)) - 0.5 * lam**2 * params.nu**2))


# ---- layered representation -------------------------------------------------------
@dataclass
class LayeredRepresentation:
    """Symmetric unimodal f written as the law of xi*Y, Y ~ Uniform[-1/2, 1/2].

    g(y) is the length of {s : f(s) >= y}; H has density g on (0, f(0)] and
    xi = g(H). In half-width coordinates, P{xi <= 2s} = 2*int_0^s f - 2 s f(s).
    """

    f: Callable
    f0: float
    s_grid: np.ndarray
    xi_cdf: np.ndarray  # P{xi <= 2 s} on s_grid

    def g(self, y):
        """Level-set length at height y in (0, f(0)]."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        lo = np.zeros_like(y)
        hi = np.full_like(y, self.s_grid[-1])
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            inside = np.asarray(self.f(mid)) >= y
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return 2.0 * lo

    def area(self) -> float:
        """Integral of g over (0, f(0)]; equals the mass of f."""
        val, _ = integrate.quad(lambda y: float(self.g(y)[0]), 0.0, self.f0, limit=400, epsabs=1e-12)
        return val

    def sample_scale(self, n: int, seed) -> np.ndarray:
        u = make_rng(seed).random(n)
        k = np.clip(np.searchsorted(self.xi_cdf, u, side="left"), 1, len(self.s_grid) - 1)
        c0, c1 = self.xi_cdf[k - 1], self.xi_cdf[k]
        frac = np.where(c1 > c0, (u - c0) / np.where(c1 > c0, c1 - c0, 1.0), 1.0)
        return 2.0 * (self.s_grid[k - 1] + frac * (self.s_grid[k] - self.s_grid[k - 1]))

    def sample(self, n: int, seed) -> np.ndarray:
        """Draws of xi*Y."""
        rng = make_rng(seed)
        xi = self.sample_scale(n, rng)
        return xi * rng.uniform(-0.5, 0.5, n)

    def mixture_density(self, x):
        """Density of xi*Y, E[1{xi >= 2|x|}/xi], from the tabulated scale law."""
        x = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
        dK = np.diff(self.xi_cdf)
        xi_mid = self.s_grid[:-1] + self.s_grid[1:]  # 2 * midpoint
        # cumulative sums from the right of dK/xi
        tail = np.concatenate([np.cumsum((dK / xi_mid)[::-1])[::-1], [0.0]])
        idx = np.searchsorted(self.s_grid, x, side="left")
        return tail[np.clip(idx, 0, len(tail) - 1)]

    def moment(self, k: float) -> float:
        """E[xi^k] from the tabulated scale law (k may be negative)."""
        dK = np.diff(self.xi_cdf)
        xi_mid = self.s_grid[:-1] + self.s_grid[1:]
        return float(np.sum(dK * xi_mid**k))


def mixture_decompose(f, grid: int = 400_001, s_max: float | None = None, tol: float = 1e-9) -> LayeredRepresentation:
    """Layered representation of a symmetric unimodal density ``f`` (callable or spec)."""
    if isinstance(f, DistributionSpec):
        spec = f
        if not spec.has_density:
            raise CapabilityError(f"{spec.describe()} has no density")
        if s_max is None:
            s_max = effective_range(spec, tail=1e-16)
        f = lambda x, _s=spec: density(_s, x)
    f0 = float(f(0.0))
    if not (math.isfinite(f0) and f0 > 0):
        raise ShapeError("f(0) must be finite and positive")
    if s_max is None:
        s_max = 1.0
        while float(f(s_max)) > 1e-16 * f0:
            s_max *= 1.5
            if s_max > 1e6:
                raise ShapeError("density does not decay")
    s = np.linspace(0.0, s_max, grid)
    fs = np.asarray(f(s), dtype=float)
    fneg = np.asarray(f(-s), dtype=float)
    if np.max(np.abs(fs - fneg)) > tol * f0:
        raise ShapeError("density is not symmetric about 0")
    if np.any(np.diff(fs) > tol * f0):
        raise ShapeError("density is not unimodal: level sets are not intervals on the grid")
    mass_inside = 2.0 * integrate.cumulative_trapezoid(fs, s, initial=0.0)
    xi_cdf = np.clip(mass_inside - 2.0 * s * fs, 0.0, None)
    xi_cdf = np.maximum.accumulate(xi_cdf)
    total = xi_cdf[-1]
    if abs(total - 1.0) > 1e-4:
        raise ShapeError(f"density mass on the grid is {total:.6g}, not 1")
    return LayeredRepresentation(f=f, f0=f0, s_grid=s, xi_cdf=xi_cdf / total)

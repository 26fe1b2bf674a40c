"""Essential least common denominator of a real vector.

    LCD_gamma(a) = inf{ theta > 0 : dist(theta*a, Z^n) <= min(gamma, ||theta*a|| / 10) }

The search is a one-parameter scan. ``theta -> dist(theta*a, Z^n)`` is
Lipschitz with constant ||a||, so the admissibility margin

    h(theta) = dist(theta*a, Z^n) - min(gamma, theta*||a|| / 10)

is Lipschitz with constant 1.1*||a||. Grid intervals whose Lipschitz lower
bound is positive cannot contain an admissible theta and are discarded; the
rest are subdivided in order until an admissible point is found at
resolution ``tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """A real coefficient vector with its Euclidean norm cached."""

    entries: np.ndarray
    norm: float

    @classmethod
    def of(cls, values) -> "CoefficientVector":
        if isinstance(values, CoefficientVector):
            return values
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise DomainError("coefficient vector is empty")
        if not np.all(np.isfinite(arr)):
            raise DomainError("coefficient vector has non-finite entries")
        arr.setflags(write=False)
        return cls(arr, float(np.linalg.norm(arr)))

    @property
    def n(self) -> int:
        return self.entries.size

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries)))

    @property
    def is_zero(self) -> bool:
        return self.norm == 0.0

    def normalized(self) -> "CoefficientVector":
        if self.is_zero:
            raise DomainError("cannot normalize the zero vector")
        return CoefficientVector.of(self.entries / self.norm)

    def scaled(self, c: float) -> "CoefficientVector":
        return CoefficientVector.of(self.entries * c)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __len__(self):
        return self.n

    def tolist(self) -> list[float]:
        return [float(v) for v in self.entries]


def as_vector(values) -> CoefficientVector:
    return CoefficientVector.of(values)


@dataclass(frozen=True)
class LcdResult:
    theta_star: float
    achieved_dist: float
    gamma: float
    capped: bool
    search_cap: float

    @property
    def inverse(self) -> float:
        """Upper bound on 1/LCD (1/search_cap when capped)."""
        return 1.0 / self.theta_star if not self.capped else 1.0 / self.search_cap

    def to_dict(self) -> dict:
        return {
            "theta_star": self.theta_star,
            "achieved_dist": self.achieved_dist,
            "gamma": self.gamma,
            "capped": self.capped,
            "search_cap": self.search_cap,
        }


def dist_to_lattice(theta: float, alpha) -> float:
    """Euclidean distance from theta*alpha to Z^n (ties rounded half to even)."""
    if not theta > 0:
        raise DomainError("theta must be positive")
    x = theta * CoefficientVector.of(alpha).entries
    return float(np.sqrt(np.sum((x - np.rint(x)) ** 2)))


def _dist_many(thetas: np.ndarray, a: np.ndarray) -> np.ndarray:
    x = np.multiply.outer(thetas, a)
    return np.sqrt(np.sum((x - np.rint(x)) ** 2, axis=-1))


def default_search_cap(alpha) -> float:
    a = CoefficientVector.of(alpha)
    return 1e3 * max(1, a.n) / a.norm


def lcd(alpha, gamma: float, search_cap: float | None = None, tol: float = 1e-9, block: int = 4096) -> LcdResult:
    """Essential LCD of ``alpha`` (not normalized) located to within ``tol``."""
    a = CoefficientVector.of(alpha)
    if a.is_zero:
        raise DomainError("LCD of the zero vector is undefined")
    if search_cap is None:
        search_cap = default_search_cap(a)
    if not (gamma > 0 and search_cap > 0 and tol > 0):
        raise DomainError("gamma, search_cap and tol must be positive")
    ent, norm = a.entries, a.norm
    lip = 1.1 * norm

    def margin(th):
        th = np.asarray(th, dtype=float)
        return _dist_many(th, ent) - np.minimum(gamma, th * norm / 10.0)

    def first_in(lo, hi, h_lo, h_hi):
        # earliest admissible point of [lo, hi] at resolution tol, or None
        if (h_lo + h_hi - lip * (hi - lo)) / 2.0 > 0:
            return None
        if hi - lo <= tol:
            return hi if h_hi <= 0 else None
        pts = np.linspace(lo, hi, 17)
        hs = margin(pts)
        hs[0], hs[-1] = h_lo, h_hi
        for j in range(16):
            if hs[j] <= 0:
                return pts[j]
            hit = first_in(pts[j], pts[j + 1], hs[j], hs[j + 1])
            if hit is not None:
                return hit
        return None

    # below 1/(2 max|a_i|) every coordinate rounds to 0 and dist = ||theta a|| > ||theta a||/10
    start = 0.5 / a.max_abs
    if start >= search_cap:
        return LcdResult(float(search_cap), dist_to_lattice(search_cap, a), float(gamma), True, float(search_cap))
    step = 1.0 / (64.0 * lip)
    lo = start
    while lo < search_cap:
        pts = lo + step * np.arange(block + 1)
        pts = pts[pts <= search_cap] if pts[-1] > search_cap else pts
        if pts[-1] < search_cap and len(pts) < block + 1:
            pts = np.append(pts, search_cap)
        hs = margin(pts)
        for j in range(len(pts) - 1):
            if hs[j] <= 0 and pts[j] > start:
                return _result(pts[j], a, gamma, search_cap)
            hit = first_in(pts[j], pts[j + 1], hs[j], hs[j + 1])
            if hit is not None:
                return _result(hit, a, gamma, search_cap)
        if hs[-1] <= 0:
            return _result(pts[-1], a, gamma, search_cap)
        lo = pts[-1]
        if len(pts) < 2:
            break
    return LcdResult(float(search_cap), dist_to_lattice(search_cap, a), float(gamma), True, float(search_cap))


def _result(theta, a, gamma, cap) -> LcdResult:
    theta = float(theta)
    return LcdResult(theta, dist_to_lattice(theta, a), float(gamma), False, float(cap))


def lcd_normalized(alpha, gamma: float, search_cap: float | None = None, tol: float = 1e-9) -> LcdResult:
    """LCD_gamma(alpha/||alpha||), the form every bound uses."""
    return lcd(CoefficientVector.of(alpha).normalized(), gamma, search_cap=search_cap, tol=tol)

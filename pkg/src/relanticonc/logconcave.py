"""Level-set constants of isotropic log-concave planar densities, checked on a grid.

For a density p let L = {p >= p(0,0)/2}. The loose universal constants are
D(0, 1/9) inside L, L inside D(0, 9 * 2**16) and max p in [2**-14, 162/pi].
The verifier reports measured inradius, circumradius and peak next to them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InequalityViolation, ResolutionError
from .rng import make_rng

A_SMALL = 1.0 / 9.0
A_LARGE = 9.0 * 2.0**16
PEAK_LO = 2.0**-14
PEAK_HI = 2.0 / (math.pi * A_SMALL**2)  # 162/pi
SHELL_SUM = 6.0  # sum_k k^2 2^-k


@dataclass(frozen=True)
class PlanarDensity:
    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    extent: float
    resolution: int = 2001
    isotropic: bool = True
    support_radius: float | None = None  # radius of a disk support, used to split quadrature

    def __call__(self, x, y):
        return self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def grid(self, resolution: int | None = None):
        m = resolution or self.resolution
        xs = np.linspace(-self.extent, self.extent, m)
        return xs, float(xs[1] - xs[0])


def _gauss(x, y):
    return np.exp(-(x * x + y * y) / 2) / (2 * math.pi)


def _disk(radius):
    def f(x, y):
        return np.where(x * x + y * y <= radius * radius, 1.0 / (math.pi * radius * radius), 0.0)

    return f


def _laplace(x, y):
    b = 1 / math.sqrt(2)  # unit variance per coordinate
    return np.exp(-(np.abs(x) + np.abs(y)) / b) / (4 * b * b)


# A disk of radius R has covariance R^2/4 per axis, so R = 2 is the isotropic one.
CATALOG = {
    "gaussian": PlanarDensity("gaussian", _gauss, extent=8.0),
    "uniform-disk": PlanarDensity("uniform-disk", _disk(2.0), extent=2.2, support_radius=2.0),
    "laplace": PlanarDensity("laplace", _laplace, extent=14.0),
}


def get_density(name: str) -> PlanarDensity:
    try:
        return CATALOG[name]
    except KeyError:
        raise DomainError(f"unknown planar density {name!r}; choose from {sorted(CATALOG)}") from None


@dataclass
class LevelSetReport:
    name: str
    contains_a_disk: bool
    within_A_disk: bool
    peak_in_range: bool
    measured_a: float
    measured_A: float
    peak: float
    center_value: float
    mass: float
    mean: tuple
    covariance: tuple
    isotropy_ok: bool
    logconcave_ok: bool
    min_midpoint_slack: float
    cells_inside: int
    cell: float

    @property
    def passed(self) -> bool:
        return self.contains_a_disk and self.within_A_disk and self.peak_in_range

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def _midpoint_slack(p: PlanarDensity, n_pairs: int, seed: int) -> float:
    """min over random pairs of log p(mid) - (log p(u) + log p(v))/2 (>= 0 for log-concave p)."""
    rng = make_rng(seed)
    r = p.support_radius if p.support_radius is not None else p.extent / 2
    pts = rng.uniform(-r, r, size=(4 * n_pairs, 2))
    pts = pts[p(pts[:, 0], pts[:, 1]) > 0][: 2 * n_pairs]
    u, v = pts[0::2], pts[1::2]
    k = min(len(u), len(v))
    u, v = u[:k], v[:k]
    m = (u + v) / 2
    with np.errstate(divide="ignore"):
        lu, lv, lm = (np.log(p(w[:, 0], w[:, 1])) for w in (u, v, m))
    return float(np.min(lm - (lu + lv) / 2))


def verify_levelset(p: PlanarDensity, resolution: int | None = None, n_pairs: int = 10_000, seed: int = 0) -> LevelSetReport:
    """Grid check of the level-set constants; inradius is the distance to the nearest cell outside L."""
    xs, h = p.grid(resolution)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    D = p(X, Y)
    mass = float(D.sum() * h * h)
    mx, my = float((X * D).sum() * h * h), float((Y * D).sum() * h * h)
    cxx = float((X * X * D).sum() * h * h) - mx * mx
    cyy = float((Y * Y * D).sum() * h * h) - my * my
    cxy = float((X * Y * D).sum() * h * h) - mx * my
    isotropy_ok = abs(mass - 1) <= 1e-3
    if p.isotropic:
        isotropy_ok = isotropy_ok and max(abs(mx), abs(my)) <= 1e-2 and max(abs(cxx - 1), abs(cyy - 1), abs(cxy)) <= 1e-2

    center = float(p(0.0, 0.0))
    inside = D >= center / 2
    n_in = int(inside.sum())
    if n_in < 100:
        raise ResolutionError(f"only {n_in} grid cells inside the level set; refine the grid")
    R = np.hypot(X, Y)
    outside = R[~inside]
    measured_a = float(outside.min()) if outside.size else float(p.extent)
    measured_A = float(R[inside].max())
    peak = float(D.max())
    diag = math.sqrt(2) * h
    slack = _midpoint_slack(p, n_pairs, seed)
    return LevelSetReport(
        name=p.name,
        contains_a_disk=bool(measured_a >= A_SMALL - diag),
        within_A_disk=bool(measured_A <= A_LARGE),
        peak_in_range=bool(PEAK_LO <= peak <= PEAK_HI),
        measured_a=measured_a,
        measured_A=measured_A,
        peak=peak,
        center_value=center,
        mass=mass,
        mean=(mx, my),
        covariance=(cxx, cxy, cyy),
        isotropy_ok=bool(isotropy_ok),
        logconcave_ok=bool(slack >= -1e-9),
        min_midpoint_slack=slack,
        cells_inside=n_in,
        cell=float(h),
    )


_GX, _GW = np.polynomial.legendre.leggauss(32)


def _gl(lo, hi, panels):
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    return (mid + half * _GX).ravel(), (half * _GW).ravel()


def sector_mass(p: PlanarDensity, theta: float, panels: int = 64) -> float:
    """Mass of the double sector {|u| <= tan(theta) |v|} by polar Gauss-Legendre quadrature."""
    if not 0 <= theta <= math.pi / 2:
        raise DomainError("theta must lie in [0, pi/2]")
    if theta == 0:
        return 0.0
    rmax = p.support_radius if p.support_radius is not None else p.extent * math.sqrt(2)
    r, rw = _gl(0.0, rmax, panels)
    # split at phi=0 so axis kinks sit on panel edges; phi is measured from the v axis
    phi_half, pw_half = _gl(0.0, theta, 4)
    phi = np.concatenate([phi_half, -phi_half])
    pw = np.concatenate([pw_half, pw_half])
    P, Rr = np.meshgrid(phi, r, indexing="ij")
    vals = p(Rr * np.sin(P), Rr * np.cos(P)) * Rr
    one = float(pw @ vals @ rw)
    return 2.0 * one  # the opposite sector carries equal mass for centrally symmetric p


def sector_mass_bound(p: PlanarDensity, theta: float, report: LevelSetReport | None = None, check: bool = True) -> tuple[float, float]:
    """(mass, shell bound 2 pi theta B A^2 * 6) with measured A (circumradius) and B (peak)."""
    if not 0 < theta <= math.pi / 4:
        raise DomainError("theta must lie in (0, pi/4]")
    rep = report or verify_levelset(p)
    mass = sector_mass(p, theta)
    bound = 2 * math.pi * theta * rep.peak * rep.measured_A**2 * SHELL_SUM
    if check and mass > bound:
        raise InequalityViolation(f"sector mass {mass} exceeds shell bound {bound} at theta={theta}")
    return mass, bound

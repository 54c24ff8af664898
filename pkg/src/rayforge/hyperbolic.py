"""Hyperbolic density estimates on punctured planes and simple model regions.

Densities use the curvature -1 normalisation: ``2/(1-|z|^2)`` on the unit
disk and ``1/Re z`` on the right half-plane. For any hyperbolic domain the
density is at most ``2/dist(z, boundary)``; the matching lower bound
``1/(2 dist)`` (Koebe) needs a simply connected domain.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import COSINE, EXP, MapSpec, derivative, evaluate, principal_arg
from .errors import (
    MapOverflow,
    NotInPreimage,
    NotRepelling,
    OmittedValue,
    OnBoundary,
    UnsupportedFamily,
)
from .symbolic import PartitionSpec, _large_root, default_partition, strip_cut_lines

ON_BOUNDARY_TOL = 1e-12
PUNCTURE_SEPARATION = 1e-10
BRANCH_RANGE = 64


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class DomainSpec:
    """The plane minus finitely many punctures."""

    punctures: tuple
    marked_fixed_point: Optional[complex] = None

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.punctures)
        object.__setattr__(self, "punctures", pts)
        if len(pts) < 2:
            raise ValueError("a hyperbolic punctured plane needs at least 2 punctures")
        for i, p in enumerate(pts):
            for q in pts[i + 1 :]:
                if abs(p - q) <= PUNCTURE_SEPARATION:
                    raise ValueError(f"punctures {p} and {q} are not separated")
        if self.marked_fixed_point is not None:
            z0 = complex(self.marked_fixed_point)
            object.__setattr__(self, "marked_fixed_point", z0)
            if min(abs(z0 - p) for p in pts) > PUNCTURE_SEPARATION:
                raise ValueError("the marked fixed point must be one of the punctures")

    simply_connected = False

    def boundary_distance(self, z: complex) -> float:
        return min(abs(z - p) for p in self.punctures)


@dataclass(frozen=True)
class Disk:
    center: complex = 0j
    radius: float = 1.0
    simply_connected = True

    def boundary_distance(self, z: complex) -> float:
        return self.radius - abs(z - self.center)

    def exact_density(self, z: complex) -> float:
        r, d = self.radius, abs(z - self.center)
        return 2 * r / (r * r - d * d)


@dataclass(frozen=True)
class HalfPlane:
    """``Re z > a``."""

    a: float = 0.0
    simply_connected = True

    def boundary_distance(self, z: complex) -> float:
        return z.real - self.a

    def exact_density(self, z: complex) -> float:
        return 1.0 / (z.real - self.a)


@dataclass(frozen=True)
class Strip:
    """``lo < Im z < hi``."""

    lo: float
    hi: float
    simply_connected = True

    def boundary_distance(self, z: complex) -> float:
        return min(z.imag - self.lo, self.hi - z.imag)

    def exact_density(self, z: complex) -> float:
        h = self.hi - self.lo
        return (math.pi / h) / math.sin(math.pi * (z.imag - self.lo) / h)


Region = Union[DomainSpec, Disk, HalfPlane, Strip]


@dataclass(frozen=True)
class DensityInterval:
    lower: float
    upper: float
    simply_connected_lower_valid: bool

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _distance(region: Region, z: complex) -> float:
    d = region.boundary_distance(complex(z))
    if not d > ON_BOUNDARY_TOL:
        raise OnBoundary(f"z={z} is on or outside the boundary (distance {d:.3g})")
    return d


def density_bounds(region: Region, z: complex) -> DensityInterval:
    d = _distance(region, z)
    if region.simply_connected:
        return DensityInterval(1.0 / (2.0 * d), 2.0 / d, True)
    return DensityInterval(0.0, 2.0 / d, False)


def _segment_bounds(region: Region, a: complex, b: complex) -> tuple[float, float]:
    """Bracket of ``int rho |dz|`` over one segment.

    The distance to the boundary is 1-Lipschitz, so along the segment it lies
    between the endpoint/midpoint values minus and plus the travelled length.
    """
    ell = abs(b - a)
    if ell == 0:
        return 0.0, 0.0
    da, db = _distance(region, a), _distance(region, b)
    dm = _distance(region, (a + b) / 2)
    d_lo = max((da + db - ell) / 2, dm - ell / 2, 0.0)
    d_hi = min(da + ell, dm + ell / 2, db + ell)
    upper = math.inf if d_lo <= 0 else 2.0 * ell / d_lo
    lower = ell / (2.0 * d_hi) if region.simply_connected else 0.0
    return lower, upper


def curve_length_bounds(region: Region, points, rel_tol: float = 0.01, max_levels: int = 12) -> tuple[float, float]:
    """Bracket the hyperbolic length of a polyline by uniform refinement."""
    z = np.asarray(getattr(points, "z", points), dtype=complex)
    if z.size < 2:
        if z.size == 1:
            _distance(region, complex(z[0]))
        return 0.0, 0.0
    prev = None
    for level in range(max_levels + 1):
        k = 2**level
        lo = hi = 0.0
        for a, b in zip(z[:-1], z[1:]):
            for j in range(k):
                s0, s1 = a + (b - a) * (j / k), a + (b - a) * ((j + 1) / k)
                l, u = _segment_bounds(region, complex(s0), complex(s1))
                lo += l
                hi += u
        if prev is not None and math.isfinite(hi):
            if abs(hi - prev[1]) <= rel_tol * hi and abs(lo - prev[0]) <= rel_tol * max(lo, 1e-300):
                return lo, hi
        prev = (lo, hi)
    return prev


# ---------------------------------------------------------------------------
# contraction near infinity


def _puncture_preimages(m: MapSpec, w: complex, near: complex, spread: int = BRANCH_RANGE) -> list[complex]:
    if w == 0 and m.family == EXP:
        return []
    if m.family == EXP:
        base = cmath.log(w / m.lam)
        return [base + 2j * math.pi * j for j in range(-spread, spread + 1)]
    if m.family == COSINE:
        big = _large_root(m.a, m.b, w)
        out = []
        for u in ((big, m.b / (m.a * big)) if big != 0 else ()):
            if u != 0:
                base = cmath.log(u)
                out.extend(base + 2j * math.pi * j for j in range(-spread, spread + 1))
        return out
    raise UnsupportedFamily("contraction certificates need closed-form preimages")


def fundamental_domain_distance(part: PartitionSpec, z: complex) -> float:
    """Distance from ``z`` to the tract line and the nearest strip cuts."""
    m = part.map
    if m.family == EXP:
        d = z.real - part.cutoff
        if d <= 0:
            return 0.0
        base = math.pi - principal_arg(m.lam)
        t = (z.imag - base) / (2 * math.pi)
        k = math.ceil(t)
        lo, hi = strip_cut_lines(part, k)
        return min(d, z.imag - lo, hi - z.imag)
    if m.family == COSINE:
        d = abs(z.real) - part.cutoff
        if d <= 0:
            return 0.0
        # Cut lines are asymptotically horizontal: heights where f lies on -i R_+.
        coef = m.a if z.real > 0 else m.b
        side = 1 if z.real > 0 else -1
        y = side * z.imag
        t = y + principal_arg(coef) + math.pi / 2
        r = t % (2 * math.pi)
        return min(d, r, 2 * math.pi - r)
    raise UnsupportedFamily("no fundamental domains for this family")


def preimage_boundary_distance(m: MapSpec, punctures: Sequence[complex], z: complex,
                               part: Optional[PartitionSpec] = None) -> float:
    """Surrogate for ``dist(z, boundary of the component of f^-1(U) at z)``."""
    part = part or default_partition(m)
    d = fundamental_domain_distance(part, z)
    for p in punctures:
        for q in _puncture_preimages(m, complex(p), z):
            d = min(d, abs(z - q))
    return d


def eta_from_distances(dist_u: float, dist_v: float) -> float:
    """``(2 / dist_U) / (1 / (2 dist_V))``."""
    return 4.0 * dist_v / dist_u


@dataclass(frozen=True)
class ContractionCertificate:
    eta_bound: float
    certified: bool


def contraction_certificate(m: MapSpec, domain: DomainSpec, z: complex,
                            tract_simply_connected: bool = True,
                            part: Optional[PartitionSpec] = None) -> ContractionCertificate:
    z = complex(z)
    try:
        fz = evaluate(m, z)
    except MapOverflow:
        fz = complex(math.inf, 0)
    if cmath.isfinite(fz) and domain.boundary_distance(fz) <= 1e-10:
        raise NotInPreimage(f"f(z) lies on a puncture of U")
    dist_u = _distance(domain, z)
    dist_v = preimage_boundary_distance(m, domain.punctures, z, part)
    eta = eta_from_distances(dist_u, dist_v)
    return ContractionCertificate(eta, bool(tract_simply_connected and eta < 1.0))


# ---------------------------------------------------------------------------
# horospheres and preimage spacing

HORO_MARGIN = 1e-3


def horosphere_check(f: Union[MapSpec, Callable[[complex], complex]], z0: complex, delta: float,
                     n_samples: int = 360, deriv: Optional[Callable[[complex], complex]] = None) -> bool:
    """Whether ``f`` maps the circle of radius ``delta`` (and delta/2, delta/4) outside itself."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if isinstance(f, MapSpec):
        m = f
        fn = lambda z: evaluate(m, z)  # noqa: E731
        dfn = lambda z: derivative(m, z)  # noqa: E731
    else:
        fn, dfn = f, deriv
    z0 = complex(z0)
    if abs(fn(z0) - z0) >= 1e-10:
        raise NotRepelling("z0 is not a fixed point")
    if dfn is None:
        h = 1e-6
        mu = (fn(z0 + h) - fn(z0 - h)) / (2 * h)
    else:
        mu = dfn(z0)
    if not abs(mu) > 1:
        raise NotRepelling(f"|f'(z0)| = {abs(mu):.6g} <= 1")
    angles = 2 * math.pi * np.arange(n_samples) / n_samples
    for d in (delta, delta / 2, delta / 4):
        worst = math.inf
        for th in angles:
            try:
                w = fn(z0 + d * cmath.exp(1j * th))
            except (OverflowError, MapOverflow):
                continue
            worst = min(worst, abs(w - z0))
        if not worst > d * (1 + HORO_MARGIN):
            return False
    return True


@dataclass(frozen=True)
class PreimageSequence:
    points: list
    K: float
    ratios: list
    residuals: list


def preimage_sequence(m: MapSpec, w: complex, count: int, first_branch: int = 1,
                      side: int = 1) -> PreimageSequence:
    """Preimages ``w_j`` of ``w`` on consecutive logarithm branches, sorted by modulus.

    Exp: ``w_j = log(w / lam) + 2 pi i j`` for ``j = first_branch, ...``.
    Cosine: the same with the large root of the quadratic in ``e^z`` on the
    chosen ``side`` (+1 right tract, -1 left tract).
    """
    w = complex(w)
    if count < 2:
        raise ValueError("count must be at least 2")
    js = range(first_branch, first_branch + count)
    if m.family == EXP:
        if w == 0:
            raise OmittedValue("0 is omitted by exponential maps")
        q = w / m.lam
        base = complex(math.log(abs(q)), principal_arg(q))
        pts = [base + 2j * math.pi * j for j in js]
    elif m.family == COSINE:
        a, b = (m.a, m.b) if side == 1 else (m.b, m.a)
        u = _large_root(a, b, w)
        base = cmath.log(u)
        pts = [side * (base + 2j * math.pi * j) for j in js]
    else:
        raise UnsupportedFamily("preimage sequences need closed-form inverse branches")
    pts.sort(key=abs)
    residuals = [abs(evaluate(m, p) - w) for p in pts]
    bad = [r for r in residuals if not r < 1e-9 * max(1.0, abs(w))]
    if bad:
        raise ArithmeticError(f"preimage residual {max(bad):.3g} exceeds 1e-9")
    ratios = [abs(pts[i + 1]) / abs(pts[i]) for i in range(len(pts) - 1)]
    return PreimageSequence(pts, max(ratios), ratios, residuals)

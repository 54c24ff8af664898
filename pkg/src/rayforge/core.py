"""Map families, orbits, periodic points and multipliers.

Three explicit entire families are supported:

* ``exp``       ``f(z) = lam * e^z``
* ``cosine``    ``f(z) = a e^z + b e^{-z}``
* ``scaledbf``  ``f(z) = alpha * C * (((pi^2-8) z + 2 pi^2) / (z (4z - pi^2)) cos(sqrt z) + 2/z)``
  with ``C = 12 pi^2 / (5 pi^2 - 48)``.

Points are plain Python ``complex`` values; arrays are ``complex128``.
"""
from __future__ import annotations

import cmath
import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import MapOverflow, NotACycle, RayforgeError

PI2 = math.pi**2
BF_SCALE = 12.0 * PI2 / (5.0 * PI2 - 48.0)
# Removable singularities of the scaledbf formula.
BF_SINGULAR = (0.0, PI2 / 4.0)
BF_TAYLOR_RADIUS = 0.5
_BF_CAUCHY_RADIUS = {0.0: 2.0, PI2 / 4.0: 1.5}
_BF_TAYLOR_DEGREE = 40

EXP, COSINE, SCALEDBF = "exp", "cosine", "scaledbf"
FAMILIES = (EXP, COSINE, SCALEDBF)


def principal_arg(w: complex) -> float:
    """Argument in (-pi, pi]; a negative zero imaginary part counts as +pi."""
    a = cmath.phase(w)
    return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class MapSpec:
    family: str
    lam: complex = 0j
    a: complex = 0j
    b: complex = 0j
    alpha: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        for v in (self.lam, self.a, self.b, self.alpha):
            if not cmath.isfinite(complex(v)):
                raise ValueError("map parameters must be finite")
        if self.family == EXP and self.lam == 0:
            raise ValueError("lambda must be nonzero")
        if self.family == COSINE and (self.a == 0 or self.b == 0):
            raise ValueError("a and b must be nonzero")
        if self.family == SCALEDBF and not self.alpha >= 1.0:
            raise ValueError("alpha must be >= 1")

    @classmethod
    def exp(cls, lam) -> "MapSpec":
        return cls(EXP, lam=complex(lam))

    @classmethod
    def cosine(cls, a, b) -> "MapSpec":
        return cls(COSINE, a=complex(a), b=complex(b))

    @classmethod
    def scaled_bf(cls, alpha: float = 1.0) -> "MapSpec":
        return cls(SCALEDBF, alpha=float(alpha))

    def __call__(self, z: complex) -> complex:
        return evaluate(self, z)

    def describe(self) -> str:
        if self.family == EXP:
            return f"exp(lambda={self.lam!r})"
        if self.family == COSINE:
            return f"cosine(a={self.a!r}, b={self.b!r})"
        return f"scaledbf(alpha={self.alpha!r})"


# ---------------------------------------------------------------------------
# scaledbf: closed form plus Taylor patches at the removable singularities


def _bf_direct(z: complex) -> complex:
    s = cmath.sqrt(z)
    return BF_SCALE * (((PI2 - 8.0) * z + 2.0 * PI2) / (z * (4.0 * z - PI2)) * cmath.cos(s) + 2.0 / z)


def _bf_direct_prime(z: complex) -> complex:
    s = cmath.sqrt(z)
    num = (PI2 - 8.0) * z + 2.0 * PI2
    den = z * (4.0 * z - PI2)
    g = num / den
    dg = ((PI2 - 8.0) * den - num * (8.0 * z - PI2)) / (den * den)
    h = cmath.cos(s)
    dh = -cmath.sin(s) / (2.0 * s)
    return BF_SCALE * (dg * h + g * dh - 2.0 / (z * z))


@functools.lru_cache(maxsize=None)
def bf_taylor_coefficients(center: float) -> np.ndarray:
    """Taylor coefficients of the unscaled scaledbf map about ``center``.

    Trapezoid rule for the Cauchy integral on a circle where the closed form
    is well conditioned; spectrally accurate for an entire function.
    """
    rho = _BF_CAUCHY_RADIUS[center]
    n = 128
    nodes = center + rho * np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.array([_bf_direct(complex(w)) for w in nodes])
    coeffs = np.fft.fft(vals) / n
    k = np.arange(_BF_TAYLOR_DEGREE + 1)
    out = coeffs[: _BF_TAYLOR_DEGREE + 1] / rho**k
    # Real on the real axis, so the coefficients are real.
    out = out.real.astype(complex)
    if center == 0.0:
        out[0] = 0.0  # exact: the poles of the two terms cancel and f(0) = 0
    return out


def _horner(coeffs: np.ndarray, dz):
    acc = 0j if np.isscalar(dz) else np.zeros_like(dz)
    for c in coeffs[::-1]:
        acc = acc * dz + c
    return acc


def _horner_prime(coeffs: np.ndarray, dz):
    d = coeffs[1:] * np.arange(1, len(coeffs))
    return _horner(d, dz)


def _bf_value(z: complex, deriv: bool) -> complex:
    for c in BF_SINGULAR:
        if abs(z - c) < BF_TAYLOR_RADIUS:
            co = bf_taylor_coefficients(c)
            return complex(_horner_prime(co, z - c) if deriv else _horner(co, z - c))
    return _bf_direct_prime(z) if deriv else _bf_direct(z)


# ---------------------------------------------------------------------------
# scalar evaluation


def _finite(w: complex) -> complex:
    if not cmath.isfinite(w):
        raise MapOverflow(f"non-finite value {w!r}")
    return w


def evaluate(m: MapSpec, z: complex) -> complex:
    z = complex(z)
    if not cmath.isfinite(z):
        raise ValueError("z must be finite")
    try:
        if m.family == EXP:
            w = m.lam * cmath.exp(z)
        elif m.family == COSINE:
            w = m.a * cmath.exp(z) + m.b * cmath.exp(-z)
        else:
            w = m.alpha * _bf_value(z, deriv=False)
    except (OverflowError, ZeroDivisionError) as exc:
        raise MapOverflow(str(exc)) from None
    return _finite(w)


def derivative(m: MapSpec, z: complex) -> complex:
    z = complex(z)
    if not cmath.isfinite(z):
        raise ValueError("z must be finite")
    try:
        if m.family == EXP:
            w = m.lam * cmath.exp(z)
        elif m.family == COSINE:
            w = m.a * cmath.exp(z) - m.b * cmath.exp(-z)
        else:
            w = m.alpha * _bf_value(z, deriv=True)
    except (OverflowError, ZeroDivisionError) as exc:
        raise MapOverflow(str(exc)) from None
    return _finite(w)


def iterate(m: MapSpec, z: complex, n: int) -> complex:
    for _ in range(n):
        z = evaluate(m, z)
    return z


def iterate_with_derivative(m: MapSpec, z: complex, n: int) -> tuple[complex, complex]:
    """Return ``(f^n(z), (f^n)'(z))`` by the chain rule."""
    d = 1 + 0j
    for _ in range(n):
        d *= derivative(m, z)
        z = evaluate(m, z)
    return z, _finite(d)


# ---------------------------------------------------------------------------
# array evaluation (rendering and grid Newton)


def evaluate_array(m: MapSpec, z: np.ndarray) -> np.ndarray:
    """Vectorised ``f``; overflow shows up as non-finite entries, never raises."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(all="ignore"):
        if m.family == EXP:
            return m.lam * np.exp(z)
        if m.family == COSINE:
            return m.a * np.exp(z) + m.b * np.exp(-z)
        return m.alpha * _bf_array(z, deriv=False)


def derivative_array(m: MapSpec, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    with np.errstate(all="ignore"):
        if m.family == EXP:
            return m.lam * np.exp(z)
        if m.family == COSINE:
            return m.a * np.exp(z) - m.b * np.exp(-z)
        return m.alpha * _bf_array(z, deriv=True)


def _bf_array(z: np.ndarray, deriv: bool) -> np.ndarray:
    s = np.sqrt(z)
    num = (PI2 - 8.0) * z + 2.0 * PI2
    den = z * (4.0 * z - PI2)
    g = num / den
    h = np.cos(s)
    if deriv:
        dg = ((PI2 - 8.0) * den - num * (8.0 * z - PI2)) / (den * den)
        dh = -np.sin(s) / (2.0 * s)
        out = BF_SCALE * (dg * h + g * dh - 2.0 / (z * z))
    else:
        out = BF_SCALE * (g * h + 2.0 / z)
    for c in BF_SINGULAR:
        near = np.abs(z - c) < BF_TAYLOR_RADIUS
        if near.any():
            co = bf_taylor_coefficients(c)
            dz = z[near] - c
            out[near] = _horner_prime(co, dz) if deriv else _horner(co, dz)
    return out


# ---------------------------------------------------------------------------
# multipliers and classification


class CycleClass(str, enum.Enum):
    ATTRACTING = "Attracting"
    SUPERATTRACTING = "Superattracting"
    REPELLING = "Repelling"
    PARABOLIC = "Parabolic"
    IRRATIONALLY_INDIFFERENT = "IrrationallyIndifferent"


CLASSIFY_EPS = 1e-6
PARABOLIC_MAX_ORDER = 64


def classify(multiplier: complex, eps: float = CLASSIFY_EPS) -> CycleClass:
    mu = complex(multiplier)
    r = abs(mu)
    if r < 1e-12:
        return CycleClass.SUPERATTRACTING
    if r < 1 - eps:
        return CycleClass.ATTRACTING
    if r > 1 + eps:
        return CycleClass.REPELLING
    turns = cmath.phase(mu) / (2 * math.pi)
    for q in range(1, PARABOLIC_MAX_ORDER + 1):
        p = round(turns * q)
        if abs(mu - cmath.exp(2j * math.pi * p / q)) <= eps:
            return CycleClass.PARABOLIC
    return CycleClass.IRRATIONALLY_INDIFFERENT


def cycle_multiplier(m: MapSpec, cycle: Sequence[complex], tol: float = 1e-8) -> complex:
    """Product of ``f'`` along a closed orbit."""
    if not cycle:
        raise NotACycle("empty cycle")
    pts = [complex(z) for z in cycle]
    for i, z in enumerate(pts):
        nxt = pts[(i + 1) % len(pts)]
        if abs(evaluate(m, z) - nxt) >= tol * max(1.0, abs(nxt)):
            raise NotACycle(f"f(cycle[{i}]) does not close onto the next point")
    mu = 1 + 0j
    for z in pts:
        mu *= derivative(m, z)
    return mu


@dataclass(frozen=True)
class PeriodicPointRecord:
    point: complex
    period: int
    multiplier: complex
    kind: CycleClass
    residual: float

    def to_json(self) -> dict:
        return {
            "point": [self.point.real, self.point.imag],
            "period": self.period,
            "multiplier": [self.multiplier.real, self.multiplier.imag],
            "class": self.kind.value,
            "residual": self.residual,
        }

    @classmethod
    def from_json(cls, d: dict) -> "PeriodicPointRecord":
        return cls(
            complex(*d["point"]),
            int(d["period"]),
            complex(*d["multiplier"]),
            CycleClass(d["class"]),
            float(d["residual"]),
        )


# ---------------------------------------------------------------------------
# Newton refinement of periodic points


def polish_periodic_point(m: MapSpec, z: complex, period: int, max_iter: int = 80) -> tuple[complex, float]:
    """Damped Newton on ``f^p(z) - z``; returns the best point seen and its residual.

    Near a multiplier-one point the root of ``f^p(z) - z`` is double, so the
    step is doubled there to keep quadratic convergence.
    """
    best, best_res = z, math.inf
    try:
        w, d = iterate_with_derivative(m, z, period)
    except MapOverflow:
        return z, math.inf
    res = abs(w - z)
    for _ in range(max_iter):
        if res < best_res:
            best, best_res = z, res
        if res == 0.0:
            break
        dF = d - 1.0
        if dF == 0:
            break
        step = (w - z) / dF
        if abs(d - 1.0) < 1e-3:
            step *= 2.0
        for _halving in range(30):
            cand = z - step
            try:
                w2, d2 = iterate_with_derivative(m, cand, period)
                r2 = abs(w2 - cand)
            except MapOverflow:
                r2 = math.inf
            if r2 < res or abs(step) < 1e-300:
                break
            step *= 0.5
        else:
            break
        if not r2 < res:
            break
        moved = abs(cand - z)
        z, w, d, res = cand, w2, d2, r2
        if moved <= 4e-16 * max(1.0, abs(z)):
            break
    if res < best_res:
        best, best_res = z, res
    return best, best_res


def _minimal_period_ok(m: MapSpec, z: complex, period: int, tol: float = 1e-8) -> bool:
    w = z
    for k in range(1, period):
        w = evaluate(m, w)
        if abs(w - z) < tol * max(1.0, abs(z)):
            return False
    return True


def make_record(m: MapSpec, z: complex, period: int) -> PeriodicPointRecord:
    w, mu = iterate_with_derivative(m, z, period)
    return PeriodicPointRecord(z, period, mu, classify(mu), abs(w - z))


def find_periodic_points(
    m: MapSpec,
    period: int,
    box: tuple[float, float, float, float],
    grid_density: int = 40,
    residual_tol: float = 1e-10,
) -> list[PeriodicPointRecord]:
    """Grid-seeded Newton search for points of exact period ``period`` in ``box``.

    ``box`` is ``(re_min, re_max, im_min, im_max)``. Returns an empty list when
    nothing converges inside the box.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    x0, x1, y0, y1 = map(float, box)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("search box is degenerate")
    xs = np.linspace(x0, x1, grid_density)
    ys = np.linspace(y0, y1, grid_density)
    z = (xs[None, :] + 1j * ys[:, None]).ravel()
    z = _grid_newton(m, z, period)
    ok = np.isfinite(z)
    pad = 1e-9 * max(1.0, abs(x1 - x0), abs(y1 - y0))
    ok &= (z.real >= x0 - pad) & (z.real <= x1 + pad) & (z.imag >= y0 - pad) & (z.imag <= y1 + pad)
    candidates = []
    for c in np.unique(np.round(z[ok], 9)):
        # Seeds that land on the same root collapse after rounding; polish from the raw value.
        raw = z[ok][np.argmin(np.abs(z[ok] - c))]
        p, res = polish_periodic_point(m, complex(raw), period)
        if not res < residual_tol:
            continue
        if not (x0 - pad <= p.real <= x1 + pad and y0 - pad <= p.imag <= y1 + pad):
            continue
        if not _minimal_period_ok(m, p, period):
            continue
        candidates.append(make_record(m, p, period))
    return _dedupe(candidates)


def _dedupe(records: list[PeriodicPointRecord]) -> list[PeriodicPointRecord]:
    kept: list[PeriodicPointRecord] = []
    for r in sorted(records, key=lambda r: (r.residual, r.point.real, r.point.imag)):
        near_one = abs(abs(r.multiplier) - 1.0) < 1e-3
        radius = 1e-5 if near_one else 1e-8
        if any(abs(r.point - k.point) < max(radius, 1e-8 * abs(k.point)) for k in kept):
            continue
        kept.append(r)
    return sorted(kept, key=lambda r: (round(r.point.real, 10), round(r.point.imag, 10)))


def _grid_newton(m: MapSpec, z: np.ndarray, period: int, max_iter: int = 80) -> np.ndarray:
    """Vectorised damped Newton; a seed's step is halved while its residual grows."""

    def F(v):
        w = v.copy()
        d = np.ones_like(v)
        for _ in range(period):
            d = d * derivative_array(m, w)
            w = evaluate_array(m, w)
        return w - v, d - 1.0

    z = z.copy()
    r, dr = F(z)
    alive = np.isfinite(r) & np.isfinite(dr)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            idx = np.nonzero(alive)[0]
            if idx.size == 0:
                break
            step = r[idx] / dr[idx]
            res = np.abs(r[idx])
            new = z[idx] - step
            nr, ndr = F(new)
            worse = ~(np.abs(nr) <= res)
            for _h in range(20):
                if not worse.any():
                    break
                step[worse] *= 0.5
                new[worse] = z[idx][worse] - step[worse]
                sub_r, sub_dr = F(new[worse])
                nr[worse], ndr[worse] = sub_r, sub_dr
                worse = ~(np.abs(nr) <= res)
            z[idx] = np.where(worse, z[idx], new)
            r[idx] = np.where(worse, r[idx], nr)
            dr[idx] = np.where(worse, dr[idx], ndr)
            done = worse | (np.abs(step) < 1e-15 * np.maximum(1.0, np.abs(z[idx]))) | ~np.isfinite(z[idx])
            alive[idx[done]] = False
    z[~np.isfinite(r)] = np.nan
    return z


# ---------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class Escaping:
    first_escape_index: int
    name: str = field(default="Escaping", init=False)


@dataclass(frozen=True)
class ConvergedToCycle:
    cycle: tuple
    period: int
    name: str = field(default="ConvergedToCycle", init=False)


@dataclass(frozen=True)
class LandedOnCycle:
    cycle: tuple
    landing_index: int
    name: str = field(default="LandedOnCycle", init=False)

    @property
    def period(self) -> int:
        return len(self.cycle)


@dataclass(frozen=True)
class Undecided:
    exceeded_radius: bool = False
    name: str = field(default="Undecided", init=False)


Verdict = Union[Escaping, ConvergedToCycle, LandedOnCycle, Undecided]


@dataclass(frozen=True)
class OrbitRecord:
    samples: tuple
    verdict: Verdict
    max_iterations: int
    escape_radius: float


CAUCHY_WINDOW = 20
CAUCHY_TOL = 1e-9
LANDING_JUMP = 1e-4


def _escape_certified(m: MapSpec, z: complex, radius: float) -> bool:
    if abs(z) <= radius or radius <= 10:
        return False
    if m.family == EXP:
        return z.real > math.log(radius / abs(m.lam)) + 1
    if m.family == COSINE:
        lo = min(abs(m.a), abs(m.b))
        return abs(z.real) > math.log((radius + abs(m.a) + abs(m.b)) / lo) + 1
    return False


def orbit(
    m: MapSpec,
    z: complex,
    max_iter: int = 1000,
    escape_radius: float = 1e3,
    max_period: int = 16,
) -> OrbitRecord:
    """Iterate ``f`` from ``z`` and attach a verdict.

    A repeat ``|z_k - z_{k-p}| < 1e-9`` ends the run either as a landing (the
    residual dropped abruptly from above 1e-4, i.e. the orbit hit the cycle
    exactly) or, once 20 trailing samples agree, as convergence.
    """
    if max_iter < 1 or not escape_radius > 0:
        raise ValueError("max_iter >= 1 and escape_radius > 0 required")
    z = complex(z)
    samples = [z]
    verdict: Verdict = Undecided()
    for _ in range(max_iter):
        if m.family == SCALEDBF and abs(z) > escape_radius:
            verdict = Undecided(exceeded_radius=True)
            break
        if _escape_certified(m, z, escape_radius):
            verdict = Escaping(len(samples) - 1)
            break
        try:
            z = evaluate(m, z)
        except MapOverflow:
            verdict = Undecided(exceeded_radius=True) if m.family == SCALEDBF else Escaping(len(samples))
            break
        samples.append(z)
        k = len(samples) - 1
        found = _detect_cycle(m, samples, k, max_period)
        if found is not None:
            verdict = found
            break
    else:
        if _escape_certified(m, z, escape_radius):
            verdict = Escaping(len(samples) - 1)
    return OrbitRecord(tuple(samples), verdict, max_iter, escape_radius)


def _detect_cycle(m: MapSpec, s: list, k: int, max_period: int):
    for p in range(1, min(max_period, k) + 1):
        scale = max(1.0, abs(s[k]))
        if abs(s[k] - s[k - p]) >= CAUCHY_TOL * scale:
            continue
        j = k - p
        if j == 0 or abs(s[k - 1] - s[j - 1]) > LANDING_JUMP * scale:
            return LandedOnCycle(tuple(s[j:k]), j)
        if k >= CAUCHY_WINDOW + p and all(
            abs(s[i] - s[i - p]) < CAUCHY_TOL * max(1.0, abs(s[i])) for i in range(k - CAUCHY_WINDOW + 1, k + 1)
        ):
            return ConvergedToCycle(_polished_cycle(m, s[k], p), p)
        return None
    return None


def _polished_cycle(m: MapSpec, z: complex, p: int) -> tuple:
    q, res = polish_periodic_point(m, z, p, max_iter=60)
    if not (res < CAUCHY_TOL and abs(q - z) < 1e-2):
        q = z
    cyc = [q]
    for _ in range(p - 1):
        cyc.append(evaluate(m, cyc[-1]))
    return tuple(cyc)


def verdict_name(v: Verdict) -> str:
    return v.name


__all__ = [
    "MapSpec",
    "evaluate",
    "derivative",
    "iterate",
    "iterate_with_derivative",
    "evaluate_array",
    "derivative_array",
    "classify",
    "CycleClass",
    "cycle_multiplier",
    "PeriodicPointRecord",
    "find_periodic_points",
    "polish_periodic_point",
    "orbit",
    "OrbitRecord",
    "Escaping",
    "ConvergedToCycle",
    "LandedOnCycle",
    "Undecided",
    "RayforgeError",
]

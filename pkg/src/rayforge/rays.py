"""Periodic dynamic rays by inverse-branch pullback, landing checks and the leg map.

A traced ray is stored level by level. Level 0 is the far tail: the pullback,
under the branch of its first symbol, of the nearly horizontal tail of the
shifted ray at real part between ``X`` and ``|coef| e^X`` (``X = 60``), where
the horizontal approximation is exact in double precision. Level ``k`` is the
image of the level-0 piece of the ``k``-times shifted address under the
composed inverse branches ``L_{s_0} ... L_{s_{k-1}}``; consecutive levels meet
exactly end to end. Sample parameters are ``t = 2^((K-1-k+u)/n)`` for level
``k`` of ``K``, position ``u`` in ``[0, 1)`` and period ``n``, so
``f^n(g(t)) = g(2t)`` holds sample-wise.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    COSINE,
    CycleClass,
    MapSpec,
    PeriodicPointRecord,
    SCALEDBF,
    classify,
    derivative,
    evaluate,
    iterate_with_derivative,
)
from .errors import (
    ContinuationAmbiguous,
    DivergentHead,
    MapOverflow,
    NotAFixedPoint,
    UnsupportedFamily,
)
from .geometry import hausdorff, head_in_disk, polyline_distance
from .symbolic import (
    ExternalAddress,
    NotInTract,
    PartitionSpec,
    asymptotic_tail_point,
    format_address,
    inverse_branch,
    preimage_candidates,
    shift,
    symbol_of,
    tail_coefficient,
    validate_symbol,
)

LEG, RAY_TAIL, RAY = "Leg", "RayTail", "Ray"

TAIL_X = 60.0
HEAD_TOL = 1e-12
HEAD_BUDGET = 2**21
MIN_SEPARATION = 1e-14
MAX_LEVEL_SAMPLES = 4096


@dataclass
class Curve:
    kind: str
    t: np.ndarray
    z: np.ndarray
    anchor: Optional[complex] = None
    tail_symbol: Optional[int] = None
    address: Optional[ExternalAddress] = None
    converged: bool = True
    marked: Optional[int] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.z = np.asarray(self.z, dtype=complex)
        if self.t.shape != self.z.shape:
            raise ValueError("t and z must have the same length")

    def __len__(self):
        return len(self.z)


# ---------------------------------------------------------------------------
# ray tracing


def _composed(m: MapSpec, symbols: Sequence[int]) -> Callable[[complex], complex]:
    """``w -> L_{s_0}(L_{s_1}(... L_{s_{q-1}}(w)))``."""
    syms = list(symbols)

    def apply(w: complex) -> complex:
        for s in reversed(syms):
            w = inverse_branch(m, s, w)
        return w

    return apply


def _dedupe_samples(t: list, z: list) -> tuple[list, list]:
    out_t, out_z = [t[0]], [z[0]]
    for tt, zz in zip(t[1:], z[1:]):
        if tt > out_t[-1] and abs(zz - out_z[-1]) > MIN_SEPARATION:
            out_t.append(tt)
            out_z.append(zz)
    return out_t, out_z


def trace_ray(
    part: PartitionSpec,
    address: ExternalAddress,
    depth: int = 40,
    samples_per_level: int = 64,
    head_tol: float = HEAD_TOL,
    head_budget: int = HEAD_BUDGET,
) -> Curve:
    """Trace the ray with the given address.

    Levels are added until a level collapses below ``head_tol`` or ``depth``
    levels exist; a head that is still moving is then pulled back alone by the
    period's composed inverse branch for at most ``head_budget`` steps. The
    returned curve has ``converged=False`` if that budget runs out.
    """
    m = part.map
    if m.family == SCALEDBF:
        raise UnsupportedFamily("rays need a closed-form partition")
    if depth < 1 or samples_per_level < 1:
        raise ValueError("depth and samples_per_level must be positive")
    if not address.is_periodic:
        return _trace_preperiodic(part, address, depth, samples_per_level, head_tol, head_budget)
    per = list(address.period)
    for s in per:
        validate_symbol(m, s)
    n = len(per)
    S = samples_per_level

    def level0(i: int, us: np.ndarray) -> list[complex]:
        # Far piece of the ray of the i-times shifted address.
        s_i, s_next, s_after = per[i % n], per[(i + 1) % n], per[(i + 2) % n]
        x_top = abs(tail_coefficient(m, s_i)) * math.exp(TAIL_X)
        xs = TAIL_X * (x_top / TAIL_X) ** us
        return [inverse_branch(m, s_i, asymptotic_tail_point(m, s_next, float(x), s_after)) for x in xs]

    lam_map = _composed(m, per)

    def build(us: np.ndarray, depth: int) -> tuple[list[list[complex]], bool]:
        levels: list[list[complex]] = []
        for k in range(depth):
            if k < n:
                piece = [_composed(m, per[:k])(w) for w in level0(k, us)]
            else:
                piece = [lam_map(w) for w in levels[k - n]]
            levels.append(piece)
            if max(abs(w - piece[0]) for w in piece) < head_tol:
                return levels, True
        return levels, False

    # Refine the u-grid until every chord is at most 1/S of its piece on the
    # first few periods; deeper pieces are nearly similar copies of these.
    us = np.linspace(0.0, 1.0, S + 1)
    check_depth = min(depth, 6 * n)
    while len(us) < MAX_LEVEL_SAMPLES:
        levels, _ = build(us, check_depth)
        bad = np.zeros(len(us) - 1, dtype=bool)
        for piece in levels:
            z = np.array(piece)
            diam = np.abs(z - z[0]).max()
            if diam < head_tol:
                continue
            bad |= np.abs(np.diff(z)) > diam / S
        if not bad.any():
            break
        mids = (us[:-1] + us[1:])[bad] / 2
        us = np.sort(np.concatenate([us, mids]))
    levels, converged_levels = build(us, depth)
    K = len(levels)
    ts: list[float] = []
    zs: list[complex] = []
    for k in range(K - 1, -1, -1):
        piece = levels[k]
        for i in range(len(us) - 1):
            ts.append(2.0 ** ((K - 1 - k + us[i]) / n))
            zs.append(piece[i])
    ts.append(2.0 ** (K / n))
    zs.append(levels[0][-1])

    head = levels[-1][0]
    converged = converged_levels
    ext_t: list[float] = []
    ext_z: list[complex] = []
    if not converged:
        level = K - 1
        record = 1
        h = head
        for step in range(1, head_budget + 1):
            nxt = lam_map(h)
            moved = abs(nxt - h)
            h = nxt
            level += n
            if step == record and level - (K - 1) <= 1000 * n:
                ext_t.append(2.0 ** ((K - 1 - level) / n))
                ext_z.append(h)
                record = max(record + 1, int(record * 1.2))
            if moved < head_tol:
                converged = True
                break
        head = h
    if ext_z:
        tmin = ext_t[-1] / 2.0
        ext_t.append(tmin)
        ext_z.append(head)
        ts = ext_t[::-1] + ts
        zs = ext_z[::-1] + zs
    ts, zs = _dedupe_samples(ts, zs)
    tail = symbol_of(part, zs[-1])
    return Curve(
        RAY,
        ts,
        zs,
        anchor=head,
        tail_symbol=None if tail is NotInTract else tail,
        address=address,
        converged=converged,
    )


def _trace_preperiodic(part, address, depth, samples_per_level, head_tol, head_budget) -> Curve:
    m = part.map
    periodic = ExternalAddress((), address.period)
    base = trace_ray(part, periodic, depth, samples_per_level, head_tol, head_budget)
    z = list(base.z)
    for s in reversed(address.preperiod):
        validate_symbol(m, s)
        out = [inverse_branch(m, s, z[-1])]
        for w in reversed(z[:-1]):
            out.append(preimage_candidates(m, w, out[-1])[0])
        z = out[::-1]
    tail = symbol_of(part, z[-1])
    return Curve(
        RAY,
        base.t.copy(),
        z,
        anchor=z[0],
        tail_symbol=None if tail is NotInTract else tail,
        address=address,
        converged=base.converged,
    )


# ---------------------------------------------------------------------------
# functional equation and landing


def functional_residual(m: MapSpec, ray: Curve, period: int) -> float:
    """Largest tube distance from ``f^n(g(t_j))`` to the ray's polyline.

    Only samples with ``2 t_j <= t_max`` are used; their images must lie on the
    sampled part of the ray.
    """
    if len(ray) < 3:
        raise ValueError("ray needs at least 3 samples")
    tmax = ray.t[-1]
    images = []
    for tt, zz in zip(ray.t, ray.z):
        if 2.0 * tt > tmax:
            continue
        w = complex(zz)
        try:
            for _ in range(period):
                w = evaluate(m, w)
        except MapOverflow:
            return math.inf
        images.append(w)
    if not images:
        return 0.0
    return float(polyline_distance(np.array(images), ray.z).max())


@dataclass(frozen=True)
class LandingEstimate:
    estimate: complex
    error_bound: float
    multiplier: Optional[complex] = None


def landing_point(
    ray: Curve,
    m: MapSpec,
    period: int,
    step_tol: float = 1e-11,
    budget: int = HEAD_BUDGET,
    parabolic_probe: int = 2**17,
) -> LandingEstimate:
    """Limit of the ray as ``t -> 0`` with an error bound.

    Repelling targets: the head is pulled back until steps drop below
    ``step_tol`` and extrapolated geometrically with the multiplier. Targets
    with ``|mu|`` within 1e-3 of 1 converge like ``1/k``; the step ratio over
    ``parabolic_probe`` further steps gives ``k`` and the ``k * step`` tail.
    """
    if ray.address is None or not ray.address.is_periodic:
        return _landing_from_samples(ray)
    lam_map = _composed(m, ray.address.period)
    h = complex(ray.z[0])
    prev = None
    first_step = None
    for _ in range(budget):
        nxt = lam_map(h)
        step = abs(nxt - h)
        if not math.isfinite(step):
            raise DivergentHead("head left the plane")
        if first_step is None:
            first_step = step
        prev, h = h, nxt
        if step < step_tol:
            break
    else:
        if first_step is not None and not step < first_step:
            raise DivergentHead("heads do not form a Cauchy sequence")
    try:
        _, mu = iterate_with_derivative(m, h, period)
    except MapOverflow:
        raise DivergentHead("head escaped") from None
    if prev is None or h == prev:
        return LandingEstimate(h, 0.0, mu)
    if abs(abs(mu) - 1.0) <= 1e-3:
        return _parabolic_extrapolation(lam_map, h, mu, parabolic_probe)
    if abs(mu) < 1.0:
        raise DivergentHead("inverse branch is repelling at the head")
    d = h - prev
    est = h - d / (1.0 - mu)
    bound = abs(d) / (abs(mu) - 1.0) + 4e-16 * abs(h)
    return LandingEstimate(est, bound, mu)


def _parabolic_extrapolation(lam_map, h: complex, mu: complex, probe: int) -> LandingEstimate:
    nxt = lam_map(h)
    d0 = nxt - h
    h = nxt
    for _ in range(probe - 1):
        nxt = lam_map(h)
        d1 = nxt - h
        h = nxt
    if d1 == 0 or abs(d1) >= abs(d0):
        return LandingEstimate(h, abs(d1), mu)
    ratio = math.sqrt(abs(d0) / abs(d1))
    k_start = probe / (ratio - 1.0)
    est = h + (k_start + probe) * d1
    return LandingEstimate(est, abs(est - h), mu)


def _landing_from_samples(ray: Curve) -> LandingEstimate:
    z = ray.z
    if len(z) < 3 or z[1] == z[0]:
        return LandingEstimate(complex(z[0]), 0.0)
    x2, x1, x0 = complex(z[2]), complex(z[1]), complex(z[0])
    den = x0 - 2 * x1 + x2
    if den == 0:
        return LandingEstimate(x0, abs(x1 - x0))
    est = x0 - (x0 - x1) ** 2 / den
    return LandingEstimate(est, abs(est - x0))


@dataclass(frozen=True)
class LandingReport:
    ray_address: ExternalAddress
    landing_estimate: complex
    matched: Optional[PeriodicPointRecord]
    gap: float
    functional_residual: float
    converged: bool
    error_bound: float = math.nan

    def to_json(self) -> dict:
        return {
            "address": format_address(self.ray_address),
            "landing": [self.landing_estimate.real, self.landing_estimate.imag],
            "matched": None if self.matched is None else self.matched.to_json(),
            "gap": self.gap if math.isfinite(self.gap) else None,
            "residual": self.functional_residual,
            "converged": self.converged,
        }


REPELLING_GAP = 1e-6
PARABOLIC_GAP = 1e-3
RESIDUAL_TOL = 1e-6


def verify_landing(
    part: PartitionSpec,
    address: ExternalAddress,
    periodic_points: Sequence[PeriodicPointRecord],
    depth: int = 40,
    samples_per_level: int = 64,
    ray: Optional[Curve] = None,
    estimate: Optional[LandingEstimate] = None,
) -> LandingReport:
    if not address.is_periodic:
        raise ValueError("verify_landing needs a periodic address")
    m = part.map
    n = len(address.period)
    if ray is None:
        ray = trace_ray(part, address, depth, samples_per_level)
    est = estimate if estimate is not None else landing_point(ray, m, n)
    residual = functional_residual(m, ray, n)
    matched = None
    gap = math.inf
    if periodic_points:
        matched = min(periodic_points, key=lambda r: abs(r.point - est.estimate))
        gap = abs(matched.point - est.estimate)
    ok = False
    if matched is not None and residual < RESIDUAL_TOL:
        if matched.kind == CycleClass.REPELLING:
            ok = gap < REPELLING_GAP
        elif matched.kind == CycleClass.PARABOLIC:
            ok = gap < PARABOLIC_GAP
    return LandingReport(address, est.estimate, matched, gap, residual, ok, est.error_bound)


# ---------------------------------------------------------------------------
# legs and the leg map

AMBIGUITY_FACTOR = 3.0
MAX_BISECTIONS = 20
REFINE_REL = 0.03
MAX_REFINE = 12
LEG_FAR_RADIUS = 40.0
THIN_REL = 0.02
THIN_FLOOR = 1e-13


def straight_leg(z0: complex, direction: complex, far_radius: float = LEG_FAR_RADIUS,
                 r_min: float = 1e-8, ratio: float = 1.05, marked_radius: float = 0.1) -> Curve:
    """Leg ``z0 + r * direction`` for geometric ``r`` until ``|z| >= far_radius``."""
    d = complex(direction)
    if d == 0:
        raise ValueError("direction must be nonzero")
    d /= abs(d)
    rs = [0.0]
    r = r_min
    while True:
        rs.append(r)
        if abs(z0 + r * d) >= far_radius and r > 1.0:
            break
        r *= ratio
    z = [z0 + r * d for r in rs]
    marked = next(i for i, r in enumerate(rs) if r >= marked_radius)
    return Curve(LEG, rs, z, anchor=z0, marked=marked)


def _newton_preimage(m: MapSpec, w: complex, ref: complex) -> list[complex]:
    z = ref
    for _ in range(60):
        try:
            fz, dz = evaluate(m, z) - w, derivative(m, z)
        except MapOverflow:
            return []
        if dz == 0:
            return []
        step = fz / dz
        z -= step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            return [z]
    return []


def _pick_preimage(m: MapSpec, w: complex, ref: complex) -> Optional[complex]:
    """Preimage of ``w`` nearest ``ref``; None when the runner-up is within factor 3."""
    if m.family == SCALEDBF:
        c = _newton_preimage(m, w, ref)
        return c[0] if c else None
    cands = preimage_candidates(m, w, ref)
    d1 = abs(cands[0] - ref)
    d2 = abs(cands[1] - ref)
    if d2 < AMBIGUITY_FACTOR * d1:
        return None
    return cands[0]


def _critical_values(m: MapSpec) -> list[complex]:
    if m.family == COSINE:
        v = 2 * cmath.sqrt(m.a * m.b)
        return [v, -v]
    return []


def _near_critical_value(m: MapSpec, w0: complex, w1: complex) -> bool:
    """Whether a critical value lies within one segment length of ``[w0, w1]``."""
    cvs = _critical_values(m)
    if not cvs:
        return False
    ell = abs(w1 - w0)
    return bool((polyline_distance(np.array(cvs), np.array([w0, w1])) <= ell).any())


def _continue(m: MapSpec, z_prev: complex, w_prev: complex, t_prev: float,
              w_to: complex, t_to: float, first: Optional[complex] = None,
              anchor: Optional[complex] = None) -> list[tuple[float, complex]]:
    """Pull back the segment from ``w_prev`` to ``w_to``.

    The segment is bisected where the preimage is ambiguous, and also where a
    pulled-back chord is longer than ``REFINE_REL`` times its distance to
    ``anchor``. Returns the new ``(t, z)`` samples, the last one being the
    preimage of ``w_to``.
    """
    out: list[tuple[float, complex]] = []
    # Stack of pending targets (t, w, bisection depth); processed nearest-first.
    pending = [(t_to, w_to, 0)]
    while pending:
        t_tgt, w_tgt, level = pending[-1]
        if first is not None and not out:
            ref = first + (w_tgt - first) / derivative(m, first)
        else:
            try:
                ref = z_prev + (w_tgt - w_prev) / derivative(m, z_prev)
            except (MapOverflow, ZeroDivisionError):
                ref = z_prev
        z_new = _pick_preimage(m, w_tgt, ref)
        if z_new is not None and _near_critical_value(m, w_prev, w_tgt):
            z_new = None
        split = False
        if z_new is None:
            if level >= MAX_BISECTIONS:
                raise ContinuationAmbiguous(f"ambiguous preimage near w={w_tgt!r}")
            split = True
        elif anchor is not None and level < MAX_REFINE:
            r = abs(z_prev - anchor)
            split = r > THIN_FLOOR * max(1.0, abs(anchor)) and abs(z_new - z_prev) > REFINE_REL * r
        if split:
            # The retried target counts the split too, so retries are bounded.
            pending[-1] = (t_tgt, w_tgt, level + 1)
            pending.append(((t_prev + t_tgt) / 2, (w_prev + w_tgt) / 2, level + 1))
            continue
        pending.pop()
        out.append((t_tgt, z_new))
        z_prev, w_prev, t_prev = z_new, w_tgt, t_tgt
    return out


def leg_pullback(m: MapSpec, leg: Curve, z0: complex, far_radius: float = LEG_FAR_RADIUS,
                 thin: bool = True) -> Curve:
    """One application of the leg map: the preimage leg anchored at ``z0``."""
    z0 = complex(z0)
    fz0 = evaluate(m, z0)
    if abs(fz0 - z0) >= 1e-10 * max(1.0, abs(z0)):
        raise NotAFixedPoint(f"|f(z0) - z0| = {abs(fz0 - z0):.3g}")
    mu = derivative(m, z0)
    if abs(mu) <= 1e-8:
        raise NotAFixedPoint("z0 is a critical point")
    if len(leg) < 2 or abs(leg.z[0] - z0) > 1e-12 * max(1.0, abs(z0)):
        raise ValueError("leg must start at z0")
    t_out = [float(leg.t[0])]
    z_out = [z0]
    index_map = [0]
    z_prev, w_prev, t_prev = z0, z0, float(leg.t[0])
    for i in range(1, len(leg)):
        w_to, t_to = complex(leg.z[i]), float(leg.t[i])
        first = z0 if i == 1 else None
        got = _continue(m, z_prev, w_prev, t_prev, w_to, t_to, first=first, anchor=z0)
        for tt, zz in got:
            t_out.append(tt)
            z_out.append(zz)
        index_map.append(len(z_out) - 1)
        z_prev, w_prev, t_prev = z_out[-1], w_to, t_to
    # Continue along the straight extension of the last segment to far_radius.
    direction = complex(leg.z[-1] - leg.z[-2])
    if direction != 0 and abs(z_out[-1]) < far_radius:
        direction /= abs(direction)
        base_w, base_t = complex(leg.z[-1]), float(leg.t[-1])
        scale = max(1.0, abs(base_w))
        j = 0
        while abs(z_out[-1]) < far_radius and j < 400:
            s = scale * 2.0 ** (j / 2)
            w_to = base_w + s * direction
            if not cmath.isfinite(w_to):
                break
            got = _continue(m, z_out[-1], w_prev, t_out[-1], w_to, base_t + s, anchor=z0)
            for tt, zz in got:
                t_out.append(tt)
                z_out.append(zz)
            w_prev = w_to
            j += 1
    marked = None if leg.marked is None else index_map[leg.marked]
    curve = Curve(LEG, t_out, z_out, anchor=z0, marked=marked)
    return thin_leg(curve) if thin else curve


def thin_leg(leg: Curve, rel: float = THIN_REL, floor: float = THIN_FLOOR) -> Curve:
    """Drop vertices closer than ``rel * |z - z0|`` to the previous kept one."""
    z0 = complex(leg.z[0])
    keep = [0]
    last = leg.z[0]
    n = len(leg)
    for i in range(1, n):
        zi = leg.z[i]
        r = abs(zi - z0)
        if i == leg.marked or i == n - 1:
            keep.append(i)
            last = zi
            continue
        if r < floor * max(1.0, abs(z0)):
            continue
        if abs(zi - last) >= rel * r:
            keep.append(i)
            last = zi
    idx = np.array(keep)
    marked = None if leg.marked is None else int(np.searchsorted(idx, leg.marked))
    return Curve(LEG, leg.t[idx], leg.z[idx], anchor=leg.anchor, marked=marked)


@dataclass(frozen=True)
class PullbackStep:
    curve: Curve
    tail_symbol: Optional[int]
    head_gap: float


def tail_symbol(part: PartitionSpec, curve: Curve):
    if len(curve) == 0:
        raise ValueError("empty curve")
    return symbol_of(part, complex(curve.z[-1]))


def pullback_sequence(m: MapSpec, z0: complex, leg: Curve, iterations: int,
                      part: PartitionSpec) -> list[PullbackStep]:
    """Iterate the leg map, recording the tail symbol and the marked-point gap."""
    if leg.marked is None:
        dist = np.abs(leg.z - z0)
        leg = replace(leg, marked=int(np.argmax(dist >= min(0.1, dist.max()))))

    def step_of(c: Curve) -> PullbackStep:
        s = tail_symbol(part, c)
        return PullbackStep(c, None if s is NotInTract else s, float(abs(c.z[c.marked] - z0)))

    out = [step_of(leg)]
    cur = leg
    for _ in range(iterations):
        cur = leg_pullback(m, cur, z0)
        out.append(step_of(cur))
    return out


def eventual_period(seq: Sequence, min_repeats: int = 3) -> Optional[tuple[int, int]]:
    """Smallest ``(preperiod, period)`` with the periodic part seen ``min_repeats`` times.

    ``None`` entries (tail not yet in a tract) may only appear in the preperiod.
    """
    n = len(seq)
    for p in range(1, n // min_repeats + 1):
        start = n - min_repeats * p
        tail = seq[start:]
        if any(s is None for s in tail):
            continue
        if all(tail[i] == tail[i - p] for i in range(p, len(tail))):
            while start > 0 and seq[start - 1] == seq[start - 1 + p] and seq[start - 1] is not None:
                start -= 1
            return start, p
    return None


def head_hausdorff(leg: Curve, ray: Curve, z0: complex, radius: float = 1e-3) -> float:
    """Hausdorff distance between the parts of leg and ray inside ``|z - z0| <= radius``."""
    a = head_in_disk(np.concatenate([[z0], leg.z]), z0, radius)
    b = head_in_disk(np.concatenate([[z0], ray.z]), z0, radius)
    return hausdorff(a, b)

"""Singular values, postsingular orbits and Case-I expansion domains."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    COSINE,
    EXP,
    SCALEDBF,
    ConvergedToCycle,
    CycleClass,
    Escaping,
    LandedOnCycle,
    MapSpec,
    OrbitRecord,
    classify,
    cycle_multiplier,
    derivative,
    derivative_array,
    evaluate,
    find_periodic_points,
    orbit,
)
from .errors import (
    DegenerateInput,
    MapOverflow,
    NoAuxiliaryFixedPoint,
    NotAFixedPoint,
    NotPostsingularlyFinite,
)
from .hyperbolic import DomainSpec
from .symbolic import preimage_candidates

PATIENCE = 50
SAME_POINT = 1e-9
DEGENERATE_RADIUS = 1e-6
BF_CRITICAL_BOX = (0.0, 400.0, -5.0, 5.0)
BF_SEEDS = (200, 50)
INTERVAL_PUNCTURES = 64


class SingularVerdict(str, enum.Enum):
    POSTSINGULARLY_FINITE = "PostsingularlyFinite"
    GEOMETRICALLY_FINITE = "GeometricallyFinite"
    NOT_GEOMETRICALLY_FINITE = "NotGeometricallyFinite"
    UNDECIDED = "Undecided"

    def implies_geometrically_finite(self) -> bool:
        return self in (SingularVerdict.POSTSINGULARLY_FINITE, SingularVerdict.GEOMETRICALLY_FINITE)


# ---------------------------------------------------------------------------
# singular values


def _bf_critical_points(m: MapSpec, box=BF_CRITICAL_BOX, seeds=BF_SEEDS, iters: int = 60) -> list[complex]:
    re0, re1, im0, im1 = box
    nx, ny = seeds
    xs = np.linspace(re0, re1, nx)
    ys = np.linspace(im0, im1, ny)
    z = (xs[None, :] + 1j * ys[:, None]).ravel()
    h = 1e-5
    with np.errstate(all="ignore"):
        for _ in range(iters):
            g = derivative_array(m, z)
            g2 = (derivative_array(m, z + h) - derivative_array(m, z - h)) / (2 * h)
            step = g / g2
            step = np.where(np.abs(step) > 10.0, 10.0 * step / np.abs(step), step)
            z = z - step
        ok = np.isfinite(z) & (np.abs(derivative_array(m, z)) < 1e-8 * np.maximum(1.0, np.abs(z)))
    z = z[ok & (z.real >= re0) & (z.real <= re1) & (np.abs(z.imag) <= 1e-6)]
    out: list[complex] = []
    for c in sorted(z.real):
        c = complex(float(c), 0.0)
        if all(abs(c - d) > 1e-6 * max(1.0, abs(c)) for d in out):
            out.append(c)
    return out


def singular_values(m: MapSpec, box=BF_CRITICAL_BOX, seeds=BF_SEEDS) -> list[complex]:
    """Finite critical and asymptotic values (a finite sample of them for ScaledBF)."""
    if m.family == EXP:
        return [0j]
    if m.family == COSINE:
        v = 2 * cmath.sqrt(m.a * m.b)
        return [v, -v]
    values = [0j]
    for c in _bf_critical_points(m, box, seeds):
        v = evaluate(m, c)
        if abs(v.imag) > 1e-6 * max(1.0, abs(v)):
            continue
        v = complex(v.real, 0.0)
        if all(abs(v - u) > 1e-9 * max(1.0, abs(v)) for u in values):
            values.append(v)
    return values


# ---------------------------------------------------------------------------
# postsingular orbits


@dataclass(frozen=True)
class SingularOrbitReport:
    map: MapSpec
    singular_values: tuple
    per_value: tuple
    verdict: SingularVerdict
    note: str = ""

    def postsingular_set(self) -> list[complex]:
        """All orbit samples, deduplicated (finite only for a PSF verdict)."""
        pts: list[complex] = []
        for rec in self.per_value:
            for z in rec.samples:
                if all(abs(z - q) > SAME_POINT * max(1.0, abs(z)) for q in pts):
                    pts.append(complex(z))
        return pts

    def to_json(self) -> dict:
        per = []
        for v, rec in zip(self.singular_values, self.per_value):
            verdict = rec.verdict
            entry = {
                "value": [v.real, v.imag],
                "verdict": verdict.name,
                "iterations": len(rec.samples) - 1,
                "cycle": [[c.real, c.imag] for c in getattr(verdict, "cycle", ())],
            }
            per.append(entry)
        return {
            "map": self.map.describe(),
            "singular_values": [[v.real, v.imag] for v in self.singular_values],
            "per_value": per,
            "verdict": self.verdict.value,
            "note": self.note,
        }


def _cycle_kind(m: MapSpec, cycle: Sequence[complex]) -> CycleClass:
    try:
        return classify(cycle_multiplier(m, cycle, tol=1e-6))
    except Exception:
        return CycleClass.IRRATIONALLY_INDIFFERENT


def postsingular_analysis(m: MapSpec, max_iter: int = 2000, escape_radius: float = 1e3,
                          values: Optional[Sequence[complex]] = None) -> SingularOrbitReport:
    """Follow every singular value and give a desk-scale finiteness verdict.

    Orbits that are still undecided after ``max_iter`` steps get ``50 x``
    more (slow parabolic convergence). Any escaping orbit gives
    NotGeometricallyFinite; all exact landings give PostsingularlyFinite;
    landings plus convergence to attracting or parabolic cycles give
    GeometricallyFinite.
    """
    vals = list(values) if values is not None else singular_values(m)
    records: list[OrbitRecord] = []
    for v in vals:
        rec = orbit(m, v, max_iter=max_iter, escape_radius=escape_radius)
        if rec.verdict.name == "Undecided" and not rec.verdict.exceeded_radius:
            rec = orbit(m, v, max_iter=PATIENCE * max_iter, escape_radius=escape_radius)
        records.append(rec)

    note = ""
    verdicts = [r.verdict for r in records]
    if m.family == SCALEDBF:
        # Critical values accumulate at the asymptotic value 0; when 0 is a
        # non-attracting fixed point, singular values in the Fatou set
        # accumulate on the Julia set.
        if abs(evaluate(m, 0j)) < 1e-9 and abs(derivative(m, 0j)) >= 1 - 1e-6:
            note = "critical values accumulate at the non-attracting fixed point 0"
            return SingularOrbitReport(m, tuple(vals), tuple(records), SingularVerdict.NOT_GEOMETRICALLY_FINITE, note)
    if any(isinstance(v, Escaping) for v in verdicts):
        verdict = SingularVerdict.NOT_GEOMETRICALLY_FINITE
    elif all(isinstance(v, LandedOnCycle) for v in verdicts):
        verdict = SingularVerdict.POSTSINGULARLY_FINITE
    elif all(
        isinstance(v, LandedOnCycle)
        or (
            isinstance(v, ConvergedToCycle)
            and _cycle_kind(m, v.cycle) in (CycleClass.ATTRACTING, CycleClass.SUPERATTRACTING, CycleClass.PARABOLIC)
        )
        for v in verdicts
    ):
        verdict = SingularVerdict.GEOMETRICALLY_FINITE
    else:
        verdict = SingularVerdict.UNDECIDED
    return SingularOrbitReport(m, tuple(vals), tuple(records), verdict, note)


# ---------------------------------------------------------------------------
# expansion domains

CONDITION_KEYS = ("a", "b", "c", "d")


@dataclass(frozen=True)
class ExpansionDomainReport:
    domain: DomainSpec
    conditions: dict
    diagnostics: dict
    auxiliary: Optional[complex] = None

    @property
    def admissible(self) -> bool:
        return all(self.conditions[k] for k in CONDITION_KEYS)

    def to_json(self) -> dict:
        z0 = self.domain.marked_fixed_point
        return {
            "punctures": [[p.real, p.imag] for p in self.domain.punctures],
            "marked_fixed_point": None if z0 is None else [z0.real, z0.imag],
            "auxiliary": None if self.auxiliary is None else [self.auxiliary.real, self.auxiliary.imag],
            "conditions": {k: bool(self.conditions[k]) for k in CONDITION_KEYS},
            "diagnostics": self.diagnostics,
            "admissible": self.admissible,
        }


def _near(z: complex, pts: Sequence[complex], tol: float) -> bool:
    return any(abs(z - p) <= tol * max(1.0, abs(z)) for p in pts)


def validate_expansion_domain(
    f: Callable[[complex], complex],
    punctures: Sequence[complex],
    z0: complex,
    preimages: Callable[[complex], Sequence[complex]],
    postsingular: Optional[Sequence[complex]] = None,
    auxiliary: Optional[complex] = None,
) -> ExpansionDomainReport:
    """Check conditions (a)-(d) for ``U = C minus punctures``.

    (a) infinity is an isolated boundary point and ``z0`` is removed;
    (b) ``f`` maps the punctures into themselves (within 1e-9) and some
    puncture has a preimage outside the set, so ``f^-1(U)`` is a proper
    subset of ``U``; (c) ``U`` is finitely connected and strictly smaller than
    the complement of the postsingular set; (d) ``z0`` is accessible.
    """
    pts = [complex(p) for p in punctures]
    z0 = complex(z0)
    diag: dict = {}
    cond_a = _near(z0, pts, SAME_POINT)
    diag["a"] = "finite puncture set; z0 removed" if cond_a else "z0 is not a puncture"

    worst = 0.0
    for p in pts:
        try:
            fp = f(p)
        except (OverflowError, MapOverflow):
            worst = math.inf
            break
        worst = max(worst, min(abs(fp - q) / max(1.0, abs(fp)) for q in pts))
    invariant = worst <= SAME_POINT
    strict_witness = None
    for p in pts:
        for q in preimages(p):
            if not _near(q, pts, SAME_POINT):
                strict_witness = q
                break
        if strict_witness is not None:
            break
    cond_b = invariant and strict_witness is not None
    diag["b"] = {
        "max_invariance_error": worst,
        "strict_witness": None if strict_witness is None else [strict_witness.real, strict_witness.imag],
    }

    ps = [complex(p) for p in (postsingular if postsingular is not None else pts)]
    extra = [p for p in pts if not _near(p, ps, SAME_POINT)]
    cond_c = len(extra) > 0
    diag["c"] = f"{len(pts)} punctures, {len(extra)} outside the postsingular set"
    cond_d = cond_a
    diag["d"] = "isolated punctures are accessible" if cond_d else "z0 missing"
    domain = DomainSpec(tuple(pts), z0 if cond_a else None)
    return ExpansionDomainReport(domain, {"a": cond_a, "b": cond_b, "c": cond_c, "d": cond_d}, diag, auxiliary)


def _map_preimages(m: MapSpec) -> Callable[[complex], list[complex]]:
    def pre(w: complex) -> list[complex]:
        if m.family == EXP and w == 0:
            return []
        return preimage_candidates(m, w, w, spread=2)

    return pre


def build_expansion_domain(m: MapSpec, z0: complex, report: SingularOrbitReport,
                           aux_box: Optional[tuple] = None) -> ExpansionDomainReport:
    """``U = C minus (P(f) and z0)``, or with an extra repelling fixed point ``w`` if ``z0`` is in ``P(f)``."""
    if report.verdict != SingularVerdict.POSTSINGULARLY_FINITE:
        raise NotPostsingularlyFinite(f"verdict is {report.verdict.value}")
    z0 = complex(z0)
    if abs(evaluate(m, z0) - z0) >= 1e-10 * max(1.0, abs(z0)):
        raise NotAFixedPoint("z0 is not a fixed point")
    if classify(derivative(m, z0)) not in (CycleClass.REPELLING, CycleClass.PARABOLIC):
        raise NotAFixedPoint("z0 is neither repelling nor parabolic")
    post = report.postsingular_set()
    d0 = min(abs(z0 - p) for p in post)
    aux = None
    if d0 <= SAME_POINT * max(1.0, abs(z0)):
        box = aux_box or (-4.0, 4.0, -8.0, 8.0)
        for rec in find_periodic_points(m, 1, box):
            if rec.kind == CycleClass.REPELLING and min(abs(rec.point - p) for p in post) > DEGENERATE_RADIUS:
                aux = rec.point
                break
        if aux is None:
            raise NoAuxiliaryFixedPoint("no repelling fixed point outside P(f) in the search box")
        punctures = post + [aux]
    elif d0 <= DEGENERATE_RADIUS:
        raise DegenerateInput(f"a postsingular point lies {d0:.3g} from z0")
    else:
        punctures = post + [z0]
    return validate_expansion_domain(
        lambda z: evaluate(m, z), punctures, z0, _map_preimages(m), postsingular=post, auxiliary=aux
    )


def interval_domain(m: MapSpec, z0: complex, y_tilde: Optional[float] = None,
                    count: int = INTERVAL_PUNCTURES) -> DomainSpec:
    """Finite stand-in for ``C minus ({z0} and [0, y~])``: ``count`` equally spaced punctures."""
    if y_tilde is None:
        y_tilde = max(v.real for v in singular_values(m))
    if not y_tilde > 0:
        raise ValueError("the interval [0, y~] must be nondegenerate")
    pts = [complex(x, 0.0) for x in np.linspace(0.0, y_tilde, count)]
    z0 = complex(z0)
    if min(abs(z0 - p) for p in pts) > SAME_POINT:
        pts.append(z0)
    return DomainSpec(tuple(pts), z0)

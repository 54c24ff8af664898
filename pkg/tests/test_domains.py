import math

import numpy as np
import pytest
from scipy.optimize import root

from rayforge import MapSpec, build_expansion_domain, postsingular_analysis, singular_values, validate_expansion_domain
from rayforge.core import ConvergedToCycle, Escaping, LandedOnCycle, evaluate, find_periodic_points
from rayforge.domains import SingularVerdict, interval_domain
from rayforge.errors import DegenerateInput, NotAFixedPoint, NotPostsingularlyFinite

from conftest import ATTRACTING_FIX, FIX_UP

V = SingularVerdict


def _psf_cosine_parameter():
    """a = b = i s with 2a cosh(2a) = p and 2a cosh(p) = p: both critical values land on a fixed point."""

    def eqs(v):
        a, p = complex(v[0], v[1]), complex(v[2], v[3])
        e1 = 2 * a * np.cosh(2 * a) - p
        e2 = 2 * a * np.cosh(p) - p
        return [e1.real, e1.imag, e2.real, e2.imag]

    sol = root(eqs, [0, 2.5, 1, 3], tol=1e-14)
    assert max(abs(e) for e in eqs(sol.x)) < 1e-12
    return complex(sol.x[0], sol.x[1]), complex(sol.x[2], sol.x[3])


PSF_A, PSF_P = _psf_cosine_parameter()


def test_psf_oracle_frozen():
    assert abs(PSF_A - 2.488873532612443j) < 1e-12
    assert abs(PSF_P - 1.3054382419547j) < 1e-11


@pytest.mark.parametrize(
    "lam,verdict",
    [(-1, V.GEOMETRICALLY_FINITE), (1 / math.e, V.GEOMETRICALLY_FINITE), (1, V.NOT_GEOMETRICALLY_FINITE)],
)
def test_exp_verdicts(lam, verdict):
    rep = postsingular_analysis(MapSpec.exp(lam))
    assert rep.verdict is verdict
    assert rep.singular_values == (0j,)


def test_exp_orbit_details():
    rep = postsingular_analysis(MapSpec.exp(-1))
    v = rep.per_value[0].verdict
    assert isinstance(v, ConvergedToCycle) and abs(v.cycle[0] - ATTRACTING_FIX) < 1e-12
    esc = postsingular_analysis(MapSpec.exp(1)).per_value[0].verdict
    assert isinstance(esc, Escaping) and esc.first_escape_index == 4
    doc = rep.to_json()
    assert set(doc) == {"map", "singular_values", "per_value", "verdict", "note"}
    assert doc["per_value"][0]["verdict"] == "ConvergedToCycle"


def test_cosine_singular_values():
    assert sorted(singular_values(MapSpec.cosine(1, 1)), key=lambda z: z.real) == [-2, 2]


def test_scaledbf_singular_values_real_nonnegative():
    sv = singular_values(MapSpec.scaled_bf(1))
    assert 0j in sv and len(sv) >= 4
    assert all(abs(v.imag) < 1e-9 and v.real >= -1e-12 for v in sv)
    rep = postsingular_analysis(MapSpec.scaled_bf(1), values=sv)
    assert rep.verdict is V.NOT_GEOMETRICALLY_FINITE and "accumulate" in rep.note
    assert rep.verdict.implies_geometrically_finite() is False


@pytest.fixture(scope="module")
def psf_map():
    return MapSpec.cosine(PSF_A, PSF_A)


@pytest.fixture(scope="module")
def psf_report(psf_map):
    return postsingular_analysis(psf_map)


def test_psf_cosine(psf_map, psf_report):
    assert psf_report.verdict is V.POSTSINGULARLY_FINITE
    assert all(isinstance(r.verdict, LandedOnCycle) for r in psf_report.per_value)
    post = psf_report.postsingular_set()
    assert len(post) == 3 and any(abs(p - PSF_P) < 1e-9 for p in post)


def test_expansion_domain_at_free_fixed_point(psf_map, psf_report):
    z0 = next(r.point for r in find_periodic_points(psf_map, 1, (-1, 1, -3, -1)) if r.kind.value == "Repelling")
    rep = build_expansion_domain(psf_map, z0, psf_report)
    assert rep.admissible and rep.auxiliary is None
    assert len(rep.domain.punctures) == 4
    doc = rep.to_json()
    assert set(doc) == {"punctures", "marked_fixed_point", "auxiliary", "conditions", "diagnostics", "admissible"}


def test_expansion_domain_adjoins_auxiliary_point(psf_map, psf_report):
    rep = build_expansion_domain(psf_map, PSF_P, psf_report)
    assert rep.admissible and rep.auxiliary is not None
    assert abs(evaluate(psf_map, rep.auxiliary) - rep.auxiliary) < 1e-9


def test_expansion_domain_errors(psf_map, psf_report):
    with pytest.raises(NotPostsingularlyFinite):
        build_expansion_domain(MapSpec.exp(-1), FIX_UP, postsingular_analysis(MapSpec.exp(-1)))
    with pytest.raises(NotAFixedPoint):
        build_expansion_domain(psf_map, 0.3, psf_report)


    class NearMiss:
        # a report whose postsingular set passes 1e-7 from z0
        verdict = V.POSTSINGULARLY_FINITE

        def postsingular_set(self):
            return [PSF_P + 1e-7, 0.1j]

    with pytest.raises(DegenerateInput):
        build_expansion_domain(psf_map, PSF_P, NearMiss())


def test_validate_generic_map():
    # z -> z^2 with U = C minus {0, 1, -1}: invariant puncture set, -1 -> 1 -> 1
    rep = validate_expansion_domain(lambda z: z * z, [0, 1, -1], 1, lambda w: [np.sqrt(w), -np.sqrt(w)], postsingular=[0])
    assert rep.conditions == {"a": True, "b": True, "c": True, "d": True}
    bad = validate_expansion_domain(lambda z: z * z, [0, 2], 2, lambda w: [np.sqrt(w)])
    assert not bad.conditions["b"] and not bad.admissible


def test_interval_domain():
    dom = interval_domain(MapSpec.scaled_bf(1), 0j, y_tilde=8.0, count=17)
    assert len(dom.punctures) == 17 and dom.marked_fixed_point == 0
    assert dom.punctures[-1] == 8


def test_psf_implies_gf():
    assert V.POSTSINGULARLY_FINITE.implies_geometrically_finite()
    assert V.GEOMETRICALLY_FINITE.implies_geometrically_finite()
    assert not V.UNDECIDED.implies_geometrically_finite()


@pytest.mark.parametrize("a", [1, 0.3 + 2j, -1.5j, 2.488873532612443j])
def test_cosine_singular_values_symmetric(a):
    sv = singular_values(MapSpec.cosine(a, a))
    assert all(any(abs(-v - w) < 1e-12 for w in sv) for v in sv)

import math
from fractions import Fraction

import numpy as np
import pytest

from limitset.algebra import parse_poly
from limitset.dynamics import (CycleCertificate, NoReturn, Section, Verdict, closure_deviation,
                               first_return, integrate, period_estimate, poincare_displacement,
                               section_candidates, tangency_residual, verify_limit_cycle)
from limitset.family import PlanarField, build_family, hamiltonian_field
from limitset.kernels import directed_hausdorff
from limitset.levelset import select_cycle, trace_level
from limitset.pipeline import Options, _bounded_lookup, realize
from limitset.semialg import parse_spec
from limitset.topology import decompose_complement

from conftest import EX12_TR

P = parse_poly
EX12_S = [(-2, 0), (2, 0), (0, 1), (0, -1)]


@pytest.fixture(scope="module")
def ex12():
    """Example cycle at t = 1e-3 as the pipeline selects it."""
    s = parse_spec(EX12_TR)
    run = realize(s, Options(lambdas=[1e-3]))
    curve = run.curves["gamma_0.001.csv"]
    model = build_family(s.f_gamma, EX12_S).model(1e-3)
    box = tuple(run.report["box"])
    return model, curve, box


@pytest.fixture(scope="module")
def ex12_section(ex12):
    model, curve, box = ex12
    s = parse_spec(EX12_TR)
    bounded = _bounded_lookup(decompose_complement(s, box))
    return section_candidates(model, model, None, curve, bounded)[0]


# ---------------------------------------------------------------------------
# integration


def test_linear_center_returns_after_two_pi():
    rot = PlanarField(P("-y"), P("x"))
    tol = 1e-10
    tr = integrate(rot, None, (1.0, 0.0), 2 * math.pi, tol)
    assert tr.status == "horizon"
    assert math.hypot(tr.end[0] - 1, tr.end[1]) < 10 * tol


def test_constant_field():
    tr = integrate(PlanarField(P("1"), P("0")), None, (0.0, 0.0), 1.0)
    assert tr.end[0] == pytest.approx(1.0, abs=1e-12) and abs(tr.end[1]) < 1e-12


def test_box_exit_and_bad_tol():
    tr = integrate(PlanarField(P("1"), P("0")), None, (0.0, 0.0), 10.0, box=(-1, 1, -1, 1))
    assert tr.status == "exit"
    # the trajectory ends at its first point outside the box
    assert tr.end[0] > 1.0 and tr.points[-2][0] <= 1.0
    with pytest.raises(ValueError):
        integrate(PlanarField(P("1"), P("0")), None, (0.0, 0.0), 1.0, tol=0)


def test_section_event_on_rotation():
    rot = PlanarField(P("-y"), P("x"))
    sec = Section((1.0, 0.0), (1.0, 0.0), (0.0, 1.0), 0.5)
    t, (x, y) = first_return(rot, None, (1.2, 0.0), sec, 2 * math.pi, 1e-10, None)
    assert t == pytest.approx(2 * math.pi, rel=1e-8)
    assert (x, y) == (pytest.approx(1.2, abs=1e-8), pytest.approx(0.0, abs=1e-8))


def test_no_return_raises():
    flow = PlanarField(P("1"), P("0"))
    sec = Section((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), 0.5)
    with pytest.raises(NoReturn):
        first_return(flow, None, (0.0, 0.0), sec, 1.0, 1e-10, (-5, 5, -5, 5))


def test_orbit_follows_the_traced_cycle(ex12):
    model, curve, box = ex12
    period = period_estimate(model, None, curve)
    x0 = curve.points[len(curve.points) // 3]
    tr = integrate(model, None, x0, period, 1e-10)
    assert tr.status == "horizon"
    a, b = curve.segments()
    assert directed_hausdorff(tr.points, a, b) < 1e-4


def test_hamiltonian_model_matches_planar_field(ex12):
    model, curve, _ = ex12
    h = build_family(P("y*(x^2+y^2-1)"), EX12_S).h
    X = hamiltonian_field(h)
    x0 = tuple(curve.points[0])
    a = integrate(model, None, x0, 5.0, 1e-11).end
    b = integrate(X, {"l": Fraction(1, 1000)}, x0, 5.0, 1e-11).end
    assert math.hypot(*(a - b)) < 1e-7


# ---------------------------------------------------------------------------
# return map and certificate


def test_displacement_signs(ex12, ex12_section):
    model, curve, box = ex12
    sec = ex12_section
    period = period_estimate(model, None, curve)
    diam = math.hypot(*(curve.points.max(axis=0) - curve.points.min(axis=0)))
    for f in (1e-3, 1e-4):
        for s in (1, -1):
            d = poincare_displacement(model, None, sec, s * f * diam, period, 1e-10, None)
            assert np.sign(d.value) == s
    zero = poincare_displacement(model, None, sec, 0.0, period, 1e-10, None)
    closure, _ = closure_deviation(model, None, sec, period, 1e-10, None)
    assert abs(zero.value) <= 10 * closure + 1e-12


def test_closure_and_order(ex12, ex12_section):
    model, curve, _ = ex12
    sec = ex12_section
    period = period_estimate(model, None, curve)
    diam = math.hypot(*(curve.points.max(axis=0) - curve.points.min(axis=0)))
    c1, _ = closure_deviation(model, None, sec, period, 1e-10, None)
    c2, _ = closure_deviation(model, None, sec, period, 1e-10 / 16, None)
    assert c1 < 1e-4 * diam
    assert c2 <= 0.5 * c1


def test_tangency(ex12):
    model, curve, _ = ex12
    assert tangency_residual(model, None, model, curve, 100) <= 1e-8


def test_example_certificates():
    s = parse_spec(EX12_TR)
    run = realize(s, Options(lambdas=[1e-3, 1e-4]))
    for e in run.report["schedule"]:
        cert = CycleCertificate.from_dict(e["certificate"])
        assert cert.verdict is Verdict.LIMIT_CYCLE
        assert cert.inside_sign == -1 and cert.outside_sign == 1
        assert cert.closure < 1e-4 * cert.diameter
        assert CycleCertificate.from_dict(cert.to_dict()) == cert


def test_point_cycle_at_one_hundredth():
    fam = build_family(P("x^2+y^2"), [])
    t = 1e-2
    model = fam.model(t)
    curves = trace_level(model, t, (-1, 1, -1, 1), 256)
    curve, _ = select_cycle(curves, np.zeros((1, 2)))
    assert np.hypot(*curve.points.T).mean() == pytest.approx(10 ** -0.5, rel=1e-9)
    cert = verify_limit_cycle(model, t, curve, box=(-1, 1, -1, 1))
    assert cert.verdict is Verdict.LIMIT_CYCLE
    assert cert.inside_sign == -1 and cert.outside_sign == 1


def test_not_a_cycle_is_inconclusive():
    # h = 1 on the circle of radius sqrt(2), so h grows along the flow there
    model = build_family(P("x^2+y^2-1"), []).model(0.0)
    curves = trace_level(P("x^2+y^2-2"), None, (-2, 2, -2, 2), 128)
    cert = verify_limit_cycle(model, 0.0, curves[0], box=(-3, 3, -3, 3))
    assert cert.verdict is Verdict.INCONCLUSIVE


def test_model_required_for_planar_field():
    curves = trace_level(P("x^2+y^2-1"), None, (-2, 2, -2, 2), 128)
    with pytest.raises(ValueError):
        verify_limit_cycle(PlanarField(P("-y"), P("x")), 0.0, curves[0])

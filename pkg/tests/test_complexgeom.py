import math

import mpmath as mp
import numpy as np
import pytest

from lyapqc.complexgeom import (
    INF,
    Isometry,
    LypRegionSpec,
    SampledCurve,
    ScaledRegion,
    apply_isometry,
    arc_chord_ratio,
    arg_upper,
    build_circle_curve,
    build_elementary_domain,
    build_gamma_curve,
    build_graph_curve,
    estimate_arc_chord,
    estimate_constants,
    estimate_l1,
    make_R_a,
    make_T_b,
    region_contains,
    region_from_kv,
    second_constant,
)
from lyapqc.errors import DataError, ParameterDomainError


def _circle_l1_oracle(mu):
    # sup over delta of 2 sin(delta/2) / delta^mu; interior critical point
    # solves tan(x) = x / mu with x = delta/2 in (0, pi/2)
    mp.mp.dps = 30
    x = mp.findroot(lambda x: mp.tan(x) - x / mu, 1.1)
    return float(2 * mp.sin(x) / (2 * x) ** mu)


# --- curves -----------------------------------------------------------------


def test_graph_curve_passes_through_origin_and_unit_point():
    g = build_graph_curve(1.0, 0.5, 1.0, 101)
    assert np.any(g.points == 0)
    assert np.isclose(g.points[-1], 1 + 1j, atol=1e-15)


def test_graph_curve_endpoint_matches_high_precision():
    g = build_graph_curve(2.0, 0.5, 0.25, 64)
    mp.mp.dps = 30
    y = 2 * mp.mpf("0.25") ** mp.mpf("1.5")
    assert abs(g.points[-1].imag - float(y)) < 1e-15
    assert g.points[-1].real == 0.25


def test_graph_curve_arc_length_is_chord_sum():
    g = build_graph_curve(1.0, 0.5, 1.0, 200)
    assert g.cum_length[0] == 0
    assert np.allclose(np.diff(g.cum_length), np.abs(np.diff(g.points)))


def test_gamma_curve_right_endpoint_angle():
    g = build_gamma_curve(1.0, 0.5, 0.25, 101)
    end = g.points[-1]
    assert abs(abs(end) - 0.25) < 1e-15
    assert abs(np.angle(end) - 0.5) < 1e-15


def test_gamma_curve_left_branch_angles():
    c, mu = 1.3, 0.4
    g = build_gamma_curve(c, mu, 0.3, 201)
    left = g.points[: np.flatnonzero(g.points == 0)[0]]
    assert np.allclose(np.angle(left), math.pi - c * np.abs(left) ** mu, atol=1e-12)


def test_gamma_curve_contains_origin_once():
    g = build_gamma_curve(2.0, 0.7, 0.2, 77)
    assert np.count_nonzero(g.points == 0) == 1


def test_gamma_curve_rejects_inadmissible_radius():
    with pytest.raises(ParameterDomainError):
        build_gamma_curve(2.0, 0.5, 1.0, 64)


@pytest.mark.parametrize("bad", [dict(c=0.0), dict(mu=1.0), dict(mu=0.0), dict(x0=-1.0), dict(n=8)])
def test_graph_curve_parameter_errors(bad):
    kw = dict(c=1.0, mu=0.5, x0=1.0, n=64)
    kw.update(bad)
    with pytest.raises(ParameterDomainError):
        build_graph_curve(**kw)


def test_sampled_curve_rejects_repeated_points():
    with pytest.raises(DataError):
        SampledCurve.from_points(np.array([0, 1, 1, 2], dtype=complex))


def test_closed_curve_length_includes_closing_segment():
    sq = SampledCurve.from_points(np.array([0, 1, 1 + 1j, 1j]), closed=True)
    assert sq.length == pytest.approx(4.0)


def test_curve_csv_round_trip():
    g = build_gamma_curve(1.0, 0.5, 0.25, 33)
    text = g.to_csv()
    assert text.splitlines()[0] == "re,im,s"
    back = SampledCurve.from_csv(text)
    assert np.array_equal(back.points, g.points)
    assert np.array_equal(back.cum_length, g.cum_length)


# --- regions ----------------------------------------------------------------


def test_region_contains_examples():
    spec = LypRegionSpec(0.5, 1.0, 0.5)
    assert region_contains(spec, 0.1j)
    assert not region_contains(spec, 0.1)
    assert not region_contains(spec, 0.5j)
    assert not region_contains(spec, 0j)


def test_region_admissibility():
    with pytest.raises(ParameterDomainError):
        LypRegionSpec(1.0, 2.0, 0.5)


def test_arg_branch_puts_lower_left_quadrant_above_pi():
    assert arg_upper(np.array([-1 - 1e-3j]))[0] > math.pi
    assert arg_upper(np.array([1 - 1e-3j]))[0] < 0


def test_region_samples_are_inside():
    spec = LypRegionSpec(0.3, 1.5, 0.6)
    assert np.all(spec.contains(spec.sample(5000, seed=2)))


def test_region_kv_round_trip():
    spec = LypRegionSpec(0.3, 1.5, 0.6)
    assert region_from_kv(spec.to_kv()) == spec
    dom = build_elementary_domain(1.0, 0.5, 0.25)
    assert region_from_kv(dom.to_kv()) == dom
    sc = ScaledRegion(spec, 2.0)
    assert region_from_kv(sc.to_kv()) == sc


def test_elementary_domain_touch_points_symmetric():
    dom = build_elementary_domain(1.0, 0.5, 0.25)
    w1, w2 = dom.touch_points
    assert w1 == -w2.conjugate()
    assert w1.real < w2.real


def test_elementary_domain_tangency_residual():
    dom = build_elementary_domain(1.0, 0.5, 0.25)
    for w in dom.touch_points:
        assert abs(abs(1j * dom.circle_center_v - w) - dom.circle_radius) <= 1e-9 * dom.circle_radius
    assert dom.tangency_residual() < 1e-9


def test_elementary_domain_fills_radius():
    dom = build_elementary_domain(1.0, 0.5, 0.25)
    assert dom.circle_center_v + dom.circle_radius == pytest.approx(0.25, rel=1e-12)


def test_elementary_boundary_in_region_closure():
    dom = build_elementary_domain(1.0, 0.5, 0.25)
    outer = LypRegionSpec(0.25, 1.0, 0.5)
    pts = dom.boundary(10_000)
    assert np.all(outer.closure_contains(pts, tol=1e-9))


def test_elementary_interior_in_region():
    dom = build_elementary_domain(2.0, 0.3, 0.2)
    pts = dom.sample(4000, seed=5)
    assert np.all(region_contains(dom.region, pts))


# --- isometries -------------------------------------------------------------


def test_T_b_maps_origin_to_b():
    b = 0.3 - 0.7j
    assert apply_isometry(make_T_b(b, 1.1), 0j) == pytest.approx(b)


def test_T_b_sends_i_to_normal():
    b, beta = 0.3 - 0.7j, 1.1
    assert apply_isometry(make_T_b(b, beta), 1j) - b == pytest.approx(np.exp(1j * beta), abs=1e-15)


def test_R_a_rotates():
    assert apply_isometry(make_R_a(0.4), 1.0) == pytest.approx(np.exp(0.4j))


def test_isometry_inverse_and_infinity():
    iso = Isometry(0.7, 1 - 2j)
    z = np.array([0.1, 2j, -3 + 1j])
    assert np.allclose(iso.inverse()(iso(z)), z, atol=1e-15)
    assert iso(INF) is INF


# --- constants --------------------------------------------------------------


def test_l1_of_segment_is_zero():
    seg = SampledCurve.from_points(np.linspace(0, 1, 50) * (1 + 2j))
    assert estimate_l1(seg, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_l1_of_circle_matches_oracle():
    c = build_circle_curve(0, 1.0, 1024)
    assert estimate_l1(c, 0.5) == pytest.approx(_circle_l1_oracle(0.5), rel=1e-4)


def test_l1_monotone_under_refinement():
    vals = [estimate_l1(build_graph_curve(1.0, 0.5, 0.5, n), 0.5) for n in (201, 401, 801)]
    assert vals[0] <= vals[1] * (1 + 1e-6) and vals[1] <= vals[2] * (1 + 1e-6)


def test_l1_scaling_law():
    g = build_graph_curve(1.0, 0.5, 0.5, 401)
    lam, mu = 3.0, 0.5
    assert estimate_l1(g.scaled(lam), mu) == pytest.approx(lam**-mu * estimate_l1(g, mu), rel=1e-9)


def test_arc_chord_circle():
    c = build_circle_curve(0, 1.0, 1024)
    assert estimate_arc_chord(c) == pytest.approx(math.pi / 2, rel=1e-5)


def _unit_square(per_side=8):
    t = np.arange(per_side) / per_side
    corners = [0, 1, 1 + 1j, 1j, 0]
    pts = np.concatenate([a + (b - a) * t for a, b in zip(corners, corners[1:])])
    return SampledCurve.from_points(pts, closed=True)


def test_arc_chord_square_midpoints():
    sq = _unit_square(8)
    # midpoints of the bottom and right edges
    i = 4
    j = 12
    assert sq.points[i] == 0.5 and sq.points[j] == 1 + 0.5j
    assert arc_chord_ratio(sq, i, j) == pytest.approx(math.sqrt(2))


def test_arc_chord_square_global():
    val = estimate_arc_chord(_unit_square(8))
    assert val >= 1
    assert val == pytest.approx(2.0)


def test_arc_chord_rejects_coincident_samples():
    pts = np.array([0, 1, 1 + 1j, 0.5 + 0.5j, 1 + 1j, 1j])
    with pytest.raises(DataError):
        estimate_arc_chord(SampledCurve.from_points(pts, closed=True))


def test_second_constant_examples():
    assert second_constant(0.0, 3.0, 0.5) == 0.0
    assert second_constant(1.0, 1.0, 0.3) == pytest.approx(math.pi / 2)
    assert second_constant(2.0, math.pi / 2, 0.5) == pytest.approx(math.pi * (math.pi / 2) ** 1.5)


def test_estimate_constants_consistent():
    est = estimate_constants(build_circle_curve(0, 1.0, 256), 0.5)
    assert est.l2 == pytest.approx(second_constant(est.l1, est.b_arc, 0.5))
    assert est.samples == 256

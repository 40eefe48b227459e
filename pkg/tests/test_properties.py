import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from lyapqc.complexgeom import Isometry, LypRegionSpec, build_elementary_domain, build_graph_curve, estimate_l1
from lyapqc.mapzoo import dilatation_arrays, make_radial_stretch
from lyapqc.qhyperbolic import convex_angle, mobius_A0, mobius_X, mobius_Y, qh_distance
from lyapqc.verifier import transform_region_params

radius = st.floats(1e-3, 1e3)
angle = st.floats(-math.pi, math.pi)


@st.composite
def punctured(draw):
    return draw(radius) * complex(math.cos(t := draw(angle)), math.sin(t))


@st.composite
def admissible_spec(draw):
    mu = draw(st.floats(0.1, 0.9))
    c = draw(st.floats(0.1, 5.0))
    eps_max = (math.pi / 2 / c) ** (1 / mu)
    eps = draw(st.floats(1e-3, 0.99)) * min(eps_max, 1.0)
    return LypRegionSpec(eps, c, mu)


@given(punctured(), punctured())
def test_qh_symmetric(z1, z2):
    assert qh_distance(z1, z2) == qh_distance(z2, z1)


@given(punctured(), punctured(), punctured())
def test_qh_triangle(z1, z2, z3):
    d12, d23, d13 = qh_distance(z1, z2), qh_distance(z2, z3), qh_distance(z1, z3)
    assert d13 <= d12 + d23 + 1e-12 * max(1.0, d13)


@given(punctured(), punctured(), st.floats(1e-3, 1e3), angle)
def test_qh_rotation_scale_invariant(z1, z2, lam, beta):
    u = lam * complex(math.cos(beta), math.sin(beta))
    assert math.isclose(qh_distance(u * z1, u * z2), qh_distance(z1, z2), rel_tol=1e-12, abs_tol=1e-12)


@given(punctured(), punctured())
def test_convex_angle_range(z1, z2):
    assert 0 <= convex_angle(z1, z2) <= math.pi


@given(punctured(), punctured())
def test_mobius_X_inverts_Y(p, z):
    # round-trip error grows like |z|^2 / |p|: stay in the well-conditioned range
    assume(abs(z - p) > 1e-3 * abs(p) and abs(z) < 100 * abs(p))
    y = mobius_Y(p, z)
    assert abs(mobius_X(p, y) - z) <= 1e-10 * max(1.0, abs(z))


@given(st.floats(-1e6, 1e6))
def test_A0_real_to_circle(x):
    assert abs(abs(mobius_A0(complex(x, 0))) - 1) < 1e-12


@given(admissible_spec(), st.integers(0, 2**32 - 1))
def test_samples_inside_region(spec, seed):
    pts = spec.sample(200, seed)
    assert np.all(spec.contains(pts))


@given(admissible_spec())
def test_boundary_in_closure(spec):
    assert np.all(spec.closure_contains(spec.boundary(400), tol=1e-9))


@given(admissible_spec())
def test_elementary_inside_parent(spec):
    dom = build_elementary_domain(spec.c, spec.mu, spec.eps)
    assert dom.tangency_residual() < 1e-9
    assert np.all(spec.contains(dom.sample(200, 1)))


@given(admissible_spec(), st.floats(1.0, 4.0))
def test_transform_monotone_in_K(spec, K):
    a = transform_region_params(spec.eps, spec.c, spec.mu, K, 1.0, 0.1)
    b = transform_region_params(spec.eps, spec.c, spec.mu, K + 0.5, 1.0, 0.1)
    assert b.mu < a.mu
    assert b.eps <= a.eps


@given(angle, st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), punctured())
def test_isometry_round_trip_and_distance(rot, shift, z):
    iso = Isometry(rot, shift)
    assert abs(iso.inverse()(iso(z)) - z) <= 1e-12 * max(1.0, abs(z), abs(shift))
    assert math.isclose(abs(iso(z) - iso(0j)), abs(z), rel_tol=1e-12, abs_tol=1e-12)


@given(st.floats(1.0, 8.0), punctured())
def test_radial_stretch_dilatation_is_K(K, z):
    lam, Lam, D = dilatation_arrays(make_radial_stretch(K), np.array([z]), mode="analytic")
    assert Lam[0] >= lam[0] > 0
    assert math.isclose(D[0], K, rel_tol=1e-9)


@given(st.floats(0.1, 0.9), st.floats(1.5, 4.0))
def test_l1_scales_like_power(mu, lam):
    g = build_graph_curve(1.0, 0.5, 0.5, 201)
    assert math.isclose(estimate_l1(g.scaled(lam), mu), lam**-mu * estimate_l1(g, mu), rel_tol=1e-9)

import math
import warnings

import numpy as np
import pytest

from lyapqc.errors import CompositionError, DataError, DomainError, NumericalError, ParameterDomainError
from lyapqc.mapzoo import (
    BoundaryFunction,
    DegeneracyWarning,
    MapHandle,
    compose,
    dilatation_at,
    dilatation_scan,
    identity_map,
    make_A0_inv_map,
    make_A0_map,
    make_angular_stretch,
    make_disk_automorphism,
    make_log_quotient,
    make_mobius,
    make_radial_stretch,
    poisson_extend,
    starlike_boundary,
    theodorsen_conformal,
)


def _grid(n=1000, seed=0, rmin=0.05, rmax=0.95):
    rng = np.random.default_rng(seed)
    r = rng.uniform(rmin, rmax, n)
    return r * np.exp(1j * rng.uniform(0, 2 * math.pi, n))


def _warped_circle():
    return BoundaryFunction.from_callable(lambda t: np.exp(1j * (t + 0.3 * np.sin(t))), 512, homeomorphism=True)


# --- model maps -------------------------------------------------------------


def test_radial_stretch_K1_is_identity():
    f = make_radial_stretch(1.0)
    z = _grid(50)
    assert np.allclose(f(z), z, rtol=1e-15)


def test_radial_stretch_modulus():
    f = make_radial_stretch(3.0)
    z = _grid(200)
    assert np.allclose(np.abs(f(z)), np.abs(z) ** (1 / 3))


def test_radial_stretch_dilatation_analytic_and_fd():
    f = make_radial_stretch(2.0)
    z = _grid(1000)
    a = dilatation_scan(f, z, mode="analytic")
    d = dilatation_scan(f, z, mode="fd")
    assert abs(a.max_D - 2.0) < 1e-6
    assert abs(d.max_D - 2.0) < 1e-3
    assert f.declared_K == 2.0


def test_radial_stretch_rejects_K_below_one():
    with pytest.raises(ParameterDomainError):
        make_radial_stretch(0.5)


def test_identity_dilatation_exact():
    s = dilatation_at(identity_map(), 0.3 + 0.2j, mode="analytic")
    assert (s.lam, s.Lam, s.D) == (1.0, 1.0, 1.0)


def test_angular_stretch_identity_and_radii():
    f = make_angular_stretch(lambda t: t)
    z = _grid(100)
    assert np.allclose(f(z), z, atol=1e-14)
    g = make_angular_stretch(lambda t: t + 0.5 * np.sin(t))
    assert np.allclose(np.abs(g(z)), np.abs(z))


def test_angular_stretch_declared_K():
    g = make_angular_stretch(lambda t: t + 0.5 * np.sin(t), lambda t: 1 + 0.5 * np.cos(t))
    assert g.declared_K == pytest.approx(2.0, rel=1e-6)


def test_angular_stretch_rejects_non_monotone():
    with pytest.raises(DataError):
        make_angular_stretch(lambda t: t + 2.0 * np.sin(t))


def test_log_quotient_derivative_decreases_along_axis():
    A = make_log_quotient()
    y = 10.0 ** -np.arange(2, 9)
    dz, _ = A.wirtinger(1j * y, mode="analytic")
    assert np.all(np.diff(np.abs(dz)) < 0)


def test_log_quotient_derivative_matches_fd():
    A = make_log_quotient()
    z = np.array([0.05 + 0.05j, -0.02 + 0.1j])
    a, _ = A.wirtinger(z, mode="analytic")
    d, _ = A.wirtinger(z, mode="fd")
    assert np.allclose(a, d, rtol=1e-6)


def test_log_quotient_tends_to_zero_and_small_lambda():
    A = make_log_quotient()
    vals = np.abs(A(1j * 10.0 ** -np.arange(2, 10)))
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-10
    y = np.geomspace(1e-6, 1e-2, 200)
    assert dilatation_scan(A, 1j * y).min_lambda < 0.2


@pytest.mark.parametrize("z", [0j, 0.3j, -0.01j])
def test_log_quotient_domain_errors(z):
    with pytest.raises(DomainError):
        make_log_quotient()(z)


def test_fd_second_order_convergence():
    f = make_radial_stretch(2.0)
    z = np.array([0.4 + 0.3j, -0.5 + 0.1j])
    exact = f.wirtinger(z, mode="analytic")[0]
    e1 = np.abs(f.wirtinger_fd(z, 1e-2)[0] - exact)
    e2 = np.abs(f.wirtinger_fd(z, 5e-3)[0] - exact)
    assert np.all((e1 / e2 > 3.5) & (e1 / e2 < 4.5))


def test_fd_step_clamped_near_boundary():
    h = poisson_extend(_warped_circle(), 256)
    z = np.array([0.0, 0.95])
    d = h.dist_to_boundary(z)
    step = h.fd_step(z)
    assert step[0] == pytest.approx(1e-3 * d[0])
    assert step[1] <= 0.5 * d[1]
    assert np.all(np.abs(z) + step < 1 - h.boundary_margin)


# --- boundary functions and Poisson extension -------------------------------


def test_boundary_function_homeomorphism_validation():
    with pytest.raises(DataError):
        BoundaryFunction.from_callable(lambda t: np.exp(-1j * t), 64, homeomorphism=True)


def test_boundary_function_interpolates_nodes():
    b = _warped_circle()
    assert np.allclose(b(b.nodes), b.values, atol=1e-12)
    lin = BoundaryFunction(b.values, "linear")
    assert np.allclose(lin(b.nodes), b.values)


def test_boundary_csv_round_trip_and_uniformity():
    b = _warped_circle()
    back = BoundaryFunction.from_csv(b.to_csv())
    assert np.array_equal(back.values, b.values)
    rows = b.to_csv().splitlines()
    rows[3] = "0.1," + rows[3].split(",", 1)[1]
    with pytest.raises(DataError):
        BoundaryFunction.from_csv("\n".join(rows))


def test_poisson_reproduces_identity():
    h = poisson_extend(BoundaryFunction.from_callable(lambda t: np.exp(1j * t), 256), 1024)
    z = _grid(300, rmax=0.9)
    assert np.allclose(h(z), z, atol=1e-12)


def test_poisson_mean_value_at_origin():
    b = _warped_circle()
    h = poisson_extend(b, 512)
    assert h(0j) == pytest.approx(np.mean(b.values), abs=1e-13)


def test_poisson_discrete_mean_value_property():
    h = poisson_extend(_warped_circle(), 1024)
    for z in _grid(100, seed=5, rmax=0.8):
        r = 0.05
        circ = z + r * np.exp(2j * math.pi * np.arange(64) / 64)
        assert abs(np.mean(h(circ)) - h(z)) < 1e-10


def test_poisson_positive_jacobian():
    h = poisson_extend(_warped_circle(), 2048)
    dz, dzb = h.wirtinger(_grid(1000, seed=2, rmax=0.95))
    assert np.all(np.abs(dz) ** 2 - np.abs(dzb) ** 2 > 0)


def test_poisson_min_lambda_positive():
    h = poisson_extend(_warped_circle(), 2048)
    assert dilatation_scan(h, _grid(1000, seed=3, rmin=0, rmax=0.95)).min_lambda > 0


def test_poisson_rejects_points_near_circle():
    h = poisson_extend(_warped_circle(), 256)
    with pytest.raises(DomainError):
        h(0.99)


def test_poisson_analytic_derivative_matches_fd():
    h = poisson_extend(_warped_circle(), 1024)
    z = np.array([0.2 + 0.3j, -0.6 + 0.1j])
    for a, d in zip(h.wirtinger(z, "analytic"), h.wirtinger(z, "fd")):
        assert np.allclose(a, d, atol=1e-7)


def test_poisson_quadrature_minimum():
    with pytest.raises(ParameterDomainError):
        poisson_extend(_warped_circle(), 32)


# --- dilatation --------------------------------------------------------------


def test_dilatation_warns_on_orientation_reversal():
    conj = MapHandle(np.conj, lambda z: (np.zeros_like(z), np.ones_like(z)))
    with pytest.warns(DegeneracyWarning):
        s = dilatation_at(conj, 0.5j)
    assert s.lam < 0
    with pytest.warns(DegeneracyWarning):
        scan = dilatation_scan(conj, _grid(10))
    assert len(scan.degenerate) == 10


def test_dilatation_scan_csv_header():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        scan = dilatation_scan(identity_map(), _grid(5))
    assert scan.to_csv().splitlines()[0] == "re,im,lambda,Lambda,D"
    assert scan.max_D == 1.0


# --- composition and Moebius -------------------------------------------------


def test_compose_with_inverse_is_identity():
    f = make_mobius(2, 1j, 0.5, 3)
    # inverse of (a z + b)/(c z + d) is (d w - b)/(-c w + a)
    g = make_mobius(3, -1j, -0.5, 2)
    z = np.array([0.1, 1 + 1j, -2j])
    assert np.allclose(compose([g, f])(z), z)


def test_compose_A0_sends_origin_to_h_of_one():
    h = make_radial_stretch(2.0)
    hh = compose([h, make_A0_map()])
    assert hh(0j) == pytest.approx(h(1.0 + 0j))


def test_compose_radial_stretches_multiply():
    f = compose([make_radial_stretch(2.0), make_radial_stretch(3.0)])
    z = _grid(200)
    assert np.allclose(f(z), make_radial_stretch(6.0)(z))
    assert dilatation_scan(f, z).max_D == pytest.approx(6.0, rel=1e-9)
    assert f.declared_K == 6.0


def test_compose_associative():
    a, b, c = make_mobius(1, 0.2, 0.1, 1), make_radial_stretch(2.0), make_mobius(1, 0, 0.05j, 1)
    z = _grid(50)
    left = compose([compose([a, b]), c])(z)
    right = compose([a, compose([b, c])])(z)
    assert np.allclose(left, right, atol=1e-10, rtol=0)


def test_compose_chain_rule_matches_fd():
    g = make_angular_stretch(lambda t: t + 0.3 * np.sin(t), lambda t: 1 + 0.3 * np.cos(t))
    f = compose([g, make_disk_automorphism(0.3)])
    z = np.array([0.2 + 0.1j, -0.3 + 0.4j])
    for a, d in zip(f.wirtinger(z, "analytic"), f.wirtinger_fd(z, 1e-5)):
        assert np.allclose(a, d, atol=1e-8)


def test_compose_detects_domain_mismatch():
    A = make_log_quotient()
    with pytest.raises(CompositionError):
        compose([A, identity_map("unit-disk")])


def test_A0_maps_are_inverse():
    z = np.array([1j, 0.5 + 2j, -3 + 0.1j])
    assert np.allclose(make_A0_inv_map()(make_A0_map()(z)), z)


def test_disk_automorphism_preserves_circle():
    f = make_disk_automorphism(0.3)
    t = np.linspace(0, 2 * math.pi, 100)
    assert np.allclose(np.abs(f(0.999999 * np.exp(1j * t))), 1.0, atol=1e-5)
    assert f(0.3) == pytest.approx(0.0)


# --- conformal map ------------------------------------------------------------


def test_theodorsen_circle():
    f = theodorsen_conformal(starlike_boundary(lambda t: 1.7 + 0 * t, 128))
    z = _grid(50)
    assert np.allclose(f(z), 1.7 * z, atol=1e-12)


def _ellipse_radius(t, a=1.0, b=1.2):
    return a * b / np.sqrt((b * np.cos(t)) ** 2 + (a * np.sin(t)) ** 2)


def test_theodorsen_ellipse_boundary():
    tol = 1e-12
    f = theodorsen_conformal(starlike_boundary(_ellipse_radius, 256), tol=tol)
    w = f(np.exp(1j * np.linspace(0, 2 * math.pi, 500)))
    resid = np.abs(w.real**2 + (w.imag / 1.2) ** 2 - 1)
    assert resid.max() < 10 * tol
    assert f(0j) == 0
    d0 = f.wirtinger(np.array([0j]))[0][0]
    assert d0.real > 0 and abs(d0.imag) < 1e-14


def test_theodorsen_kellogg_band():
    f = theodorsen_conformal(starlike_boundary(_ellipse_radius, 256))
    rng = np.random.default_rng(0)
    z1 = 0.98 * np.exp(1j * rng.uniform(0, 2 * math.pi, 2000))
    z2 = z1 * np.exp(1j * rng.uniform(-0.05, 0.05, 2000))
    q = np.abs(f(z1) - f(z2)) / np.abs(z1 - z2)
    assert 0 < q.min() and q.max() < 10


def test_theodorsen_non_convergence():
    wild = starlike_boundary(lambda t: np.exp(1.5 * np.cos(3 * t)), 128)
    with pytest.raises(NumericalError) as err:
        theodorsen_conformal(wild, iterations=3)
    assert err.value.residual is not None

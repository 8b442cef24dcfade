"""Ambient charts: connection, curvature, Ricci, NEC and geodesics."""

import dataclasses

import numpy as np
import numpy.testing as npt
import pytest

from nullvol import ambient
from nullvol.ambient import AmbientChart
from nullvol.errors import DomainExitError, SingularMetricError


def random_points(rng, n, half=1.0, dim=4):
    return rng.uniform(-half, half, size=(n, dim))


def fd_oracle(chart):
    """The same chart differentiated numerically at half the step."""
    return dataclasses.replace(
        chart, metric_jacobian=None, metric_hessian=None, connection=None, h_g=chart.h_g / 2
    )


def static_sphere():
    """``-dt^2 + dchi^2 + sin^2 chi (dth^2 + sin^2 th dph^2)``: unit round S^3 times time."""

    def metric_at(x):
        x = np.asarray(x, dtype=float)
        s1 = np.sin(x[..., 1]) ** 2
        s2 = s1 * np.sin(x[..., 2]) ** 2
        G = np.zeros(x.shape[:-1] + (4, 4))
        G[..., 0, 0] = -1.0
        G[..., 1, 1] = 1.0
        G[..., 2, 2] = s1
        G[..., 3, 3] = s2
        return G

    box = np.array([[-1.0, 1.0], [0.3, 2.8], [0.3, 2.8], [-3.0, 3.0]])
    return AmbientChart("static-sphere", 4, metric_at, box)


# --------------------------------------------------------------- christoffel


def test_minkowski_christoffel_zero():
    rng = np.random.default_rng(0)
    for flat in (True, False):
        chart = ambient.minkowski(flat=flat)
        npt.assert_array_equal(ambient.christoffel(chart, random_points(rng, 10, 5.0)), 0.0)


def test_ppwave_christoffel_against_fd_oracle():
    rng = np.random.default_rng(1)
    chart = ambient.ppwave(-1.0)
    x = random_points(rng, 20, 2.0)
    gam = ambient.christoffel(chart, x)
    oracle = ambient.christoffel(fd_oracle(chart), x)
    assert np.max(np.abs(gam - oracle)) <= 1e-7
    npt.assert_allclose(gam, np.swapaxes(gam, -1, -2), atol=1e-15)


def test_ppwave_generic_assembly_matches_closed_form():
    rng = np.random.default_rng(2)
    chart = ambient.ppwave(-1.0)
    generic = dataclasses.replace(chart, connection=None)
    x = random_points(rng, 8, 3.0)
    g1, d1 = ambient.connection_with_derivative(chart, x)
    g2, d2 = ambient.connection_with_derivative(generic, x)
    npt.assert_allclose(g1, g2, atol=1e-14)
    npt.assert_allclose(d1, d2, atol=1e-14)


def test_conformal_christoffel_hand_formula():
    # Gamma^l_mn = delta^l_m d_n w + delta^l_n d_m w - eta_mn eta^lk d_k w, w = 0.1 x^1
    rng = np.random.default_rng(3)
    chart = ambient.conformal("linear")
    eta = np.diag([-1.0, 1.0, 1.0, 1.0])
    dw = np.array([0.0, 0.1, 0.0, 0.0])
    delta = np.eye(4)
    hand = (
        np.einsum("lm,n->lmn", delta, dw)
        + np.einsum("ln,m->lmn", delta, dw)
        - np.einsum("mn,lk,k->lmn", eta, np.linalg.inv(eta), dw)
    )
    x = random_points(rng, 10, 2.0)
    gam = ambient.christoffel(chart, x)
    assert np.max(np.abs(gam - hand)) <= 1e-9


def test_christoffel_outside_domain_raises():
    chart = ambient.ppwave(-1.0, half_width=1.0)
    with pytest.raises(DomainExitError):
        ambient.christoffel(chart, np.array([0.0, 0.0, 2.0, 0.0]))


def test_singular_metric_raises():
    def metric_at(x):
        G = np.zeros(np.shape(x)[:-1] + (4, 4))
        G[..., 0, 0] = -1.0
        G[..., 1, 1] = 1.0
        return G

    chart = AmbientChart("degenerate", 4, metric_at, np.array([[-1.0, 1.0]] * 4))
    with pytest.raises(SingularMetricError):
        ambient.christoffel(chart, np.zeros(4))
    with pytest.raises(SingularMetricError):
        ambient.check_signature(chart, np.zeros((1, 4)))


# ------------------------------------------------------------------ riemann


def test_minkowski_riemann_zero():
    chart = ambient.minkowski(flat=False)
    sample = ambient.riemann(chart, np.array([0.3, -1.2, 4.0, 2.5]))
    npt.assert_array_equal(sample.riemann, 0.0)


def test_ppwave_riemann_components_and_symmetries():
    rng = np.random.default_rng(4)
    chart = ambient.ppwave(-1.0)
    x = random_points(rng, 10, 2.0)
    R = ambient.riemann(chart, x).riemann
    # only R(d_u, d_i, d_j, d_u)-type components with i, j transverse survive
    mask = np.zeros((4, 4, 4, 4), dtype=bool)
    for i in (2, 3):
        mask[0, i, i, 0] = mask[i, 0, 0, i] = mask[0, i, 0, i] = mask[i, 0, i, 0] = True
    assert np.max(np.abs(R[:, ~mask])) <= 1e-12
    npt.assert_allclose(R[:, 0, 2, 2, 0], 1.0, atol=1e-12)  # -a for a = -1
    oracle = ambient.riemann(fd_oracle(chart), x).riemann
    assert np.max(np.abs(R - oracle)) <= 1e-6
    for value in ambient.riemann(chart, x).symmetry_residuals().values():
        assert value <= 1e-10


def test_conformal_riemann_against_halved_step():
    rng = np.random.default_rng(5)
    chart = ambient.conformal("quadratic")
    x = random_points(rng, 6, 1.5)
    R = ambient.riemann(chart, x)
    oracle = ambient.riemann(dataclasses.replace(chart, h_g=chart.h_g / 2), x)
    assert np.max(np.abs(R.riemann - oracle.riemann)) <= 1e-6
    for value in R.symmetry_residuals().values():
        assert value <= 1e-6


def test_static_sphere_has_positive_spatial_ricci():
    # sign sanity of the curvature convention: the unit 3-sphere has Ric = 2 g
    chart = static_sphere()
    x = np.array([0.0, 1.1, 1.3, 0.2])
    ric = ambient.ricci_tensor(chart, x)
    G = chart.metric(x)
    expected = 2.0 * G
    expected[0, 0] = 0.0
    npt.assert_allclose(ric, expected, atol=1e-7)


# -------------------------------------------------------------------- ricci


@pytest.mark.parametrize("name", ["minkowski(4)", "ppwave(-1)", "conformal(linear)", "conformal(quadratic)"])
def test_ricci_frame_formula_matches_contraction(name):
    rng = np.random.default_rng(6)
    chart = ambient.chart_from_name(name)
    worst = 0.0
    for _ in range(50):
        x = rng.uniform(-1.0, 1.0, size=4)
        X, Y = rng.normal(size=(2, 4))
        frame_value = ambient.ricci(chart, x, X, Y)
        contracted = X @ ambient.ricci_tensor(chart, x) @ Y
        worst = max(worst, abs(frame_value - contracted))
        assert ambient.ricci(chart, x, Y, X) == pytest.approx(frame_value, abs=1e-8)
    assert worst <= 1e-8


def test_minkowski_ricci_null_zero():
    chart = ambient.minkowski(flat=False)
    k = np.array([1.0, 0.6, 0.8, 0.0])
    assert ambient.ricci(chart, np.zeros(4), k, k) == 0.0


def test_ppwave_ricci_uu_equals_contraction():
    # Ric(d_u, d_u) = -(1/2) Laplacian of a (x^2 + y^2) = -2a
    chart = ambient.ppwave(-1.0)
    du = np.array([1.0, 0.0, 0.0, 0.0])
    x = np.array([0.1, 0.2, 0.5, -0.7])
    value = ambient.ricci(chart, x, du, du)
    assert value == pytest.approx(du @ ambient.ricci_tensor(chart, x) @ du, abs=1e-12)
    assert value == pytest.approx(2.0, abs=1e-10)


def test_orthonormal_frame_first_vector_timelike():
    chart = ambient.ppwave(-1.0)
    x = np.array([0.0, 0.0, 0.4, 0.3])
    E = ambient.orthonormal_frame(chart, x)
    npt.assert_allclose(E.T @ chart.metric(x) @ E, np.diag([-1.0, 1, 1, 1]), atol=1e-12)


# ---------------------------------------------------------------------- NEC


def test_nec_minkowski_passes_with_zero_min():
    report = ambient.nec_check(ambient.minkowski(flat=False), np.zeros((3, 4)))
    assert report.passed
    assert report.min_value == 0.0
    assert report.n_directions >= 32


def test_nec_ppwave_signs():
    rng = np.random.default_rng(7)
    pts = random_points(rng, 12, 1.0)
    good = ambient.nec_check(ambient.ppwave(-1.0), pts)
    assert good.passed and good.min_value > 0
    bad = ambient.nec_check(ambient.ppwave(1.0), pts)
    assert not bad.passed
    assert len(bad.violating_points) == len(pts)


# ----------------------------------------------------------------- geodesics


def test_exp_map_minkowski_straight_line():
    chart = ambient.minkowski(flat=False)
    p = np.array([0.5, -1.0, 2.0, 0.25])
    v = np.array([1.0, 0.3, -0.2, 0.9])
    state = ambient.exp_map(chart, p, v, 1.7)
    assert np.max(np.abs(state.position - (p + 1.7 * v))) <= 1e-12
    npt.assert_allclose(state.velocity, v, atol=1e-12)


def test_exp_map_ppwave_along_v_is_linear():
    chart = ambient.ppwave(-1.0)
    p = np.array([0.2, 0.1, 0.7, -0.4])
    dv = np.array([0.0, 1.0, 0.0, 0.0])
    for t in (0.25, 0.5, 1.0):
        state = ambient.exp_map(chart, p, dv, t)
        npt.assert_allclose(state.position, p + t * dv, atol=1e-13)
        # geodesic equation residual along the line
        gam = ambient.christoffel(chart, state.position)
        assert np.max(np.abs(np.einsum("lmn,m,n->l", gam, dv, dv))) <= 1e-9


def test_exp_map_conserves_norm():
    chart = ambient.ppwave(-1.0)
    p = np.array([0.0, 0.0, 0.8, 0.3])
    v = np.array([1.0, 0.4, 0.5, -0.6])
    state = ambient.exp_map(chart, p, v, 1.5)
    n0 = v @ chart.metric(p) @ v
    n1 = state.velocity @ chart.metric(state.position) @ state.velocity
    assert abs(n1 - n0) <= 1e-8 * (1 + abs(n0))


def test_rk4_fourth_order_convergence():
    chart = ambient.ppwave(-1.0)
    p = np.array([0.0, 0.0, 0.9, 0.2])
    v = np.array([1.5, 0.2, 0.3, -0.8])
    pos = {}
    for steps in (8, 16, 32, 64, 128):
        pos[steps] = ambient.geodesic_flow(chart, p, v, steps)[0]
    ref = (16.0 * pos[128] - pos[64]) / 15.0
    errors = [np.linalg.norm(pos[s] - ref) for s in (8, 16, 32)]
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    for r in ratios:
        assert 13.0 < r < 19.0


def test_jacobi_fields_match_fd_of_endpoints():
    chart = ambient.ppwave(-1.0)
    p = np.array([0.0, 0.0, 0.5, 0.1])
    v = np.array([1.0, 0.1, 0.2, 0.3])
    steps = 64
    _, _, dx, _ = ambient.geodesic_flow(chart, p, v, steps, np.zeros((4, 4)), np.eye(4))
    h = 1e-5
    fd = np.stack(
        [
            (ambient.geodesic_flow(chart, p, v + h * e, steps)[0] - ambient.geodesic_flow(chart, p, v - h * e, steps)[0])
            / (2 * h)
            for e in np.eye(4)
        ],
        axis=-1,
    )
    npt.assert_allclose(dx, fd, atol=1e-8)


def test_geodesic_domain_exit():
    chart = ambient.ppwave(-1.0, half_width=1.0)
    with pytest.raises(DomainExitError):
        ambient.exp_map(chart, np.zeros(4), np.array([0.0, 5.0, 0.0, 0.0]), 1.0)


def test_chart_from_name():
    assert ambient.chart_from_name("minkowski(4)").dim == 4
    assert ambient.chart_from_name("ppwave(-1)").name == "ppwave(-1)"
    assert ambient.chart_from_name("conformal(linear)").derivative_mode == "finite-difference"
    with pytest.raises(ValueError):
        ambient.chart_from_name("schwarzschild(1)")

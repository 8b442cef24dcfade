import numpy as np
import numpy.testing as npt
import pytest

from nullvol import catalog, nullspace
from nullvol.errors import GeometryError, NewtonDivergenceError, RankDeficiencyError
from nullvol.variation import bump


def test_evaluate_at_zero_is_base(records):
    for rec in records.values():
        nmap = nullspace.NullSpaceMap(rec.immersion, rec.frame)
        x = rec.grid(5).nodes
        npt.assert_array_equal(nmap.evaluate(0.0, x), rec.immersion.position(x))


def test_zero_slice_has_rank_n(records):
    for rec in records.values():
        nmap = nullspace.NullSpaceMap(rec.immersion, rec.frame)
        (sample,) = nullspace.degeneracy_report(nmap, rec.grid(8), [0.0])
        assert sample.min_rank == rec.immersion.n
        assert sample.kernel_residual <= 1e-8
        assert sample.min_eigenvalue >= -1e-8


def test_gram_is_psd_with_t_kernel(records):
    rec = records["ppwave-slice"]
    nmap = nullspace.NullSpaceMap(rec.immersion, rec.frame)
    for s in nullspace.degeneracy_report(nmap, rec.grid(6), np.linspace(-0.8, 0.8, 5)):
        assert s.regular
        assert s.kernel_residual <= 1e-8


def test_plane_has_no_focal_points():
    rec = catalog.build("plane-slice")
    nmap = nullspace.NullSpaceMap(rec.immersion, rec.frame, t_window=(-20, 20))
    x = rec.grid(3).nodes
    assert nullspace.detect_focal(nmap, x, (-20.0, 20.0)) == [[] for _ in x]
    report = nullspace.degeneracy_report(nmap, rec.grid(3), [-20.0, 20.0])
    assert all(s.regular for s in report)


def test_lightcone_focal_points_match_prediction(records):
    rec = records["lightcone-flat"]
    nmap = nullspace.NullSpaceMap(rec.immersion, rec.frame, t_window=(-6, 6))
    x = rec.grid(3).nodes
    report = nullspace.focal_report(nmap, x, (-6.0, 6.0))
    assert report.matched
    assert report.max_mismatch <= 1e-4
    assert all(len(row) == 2 for row in report.detected)
    lo, hi = report.window
    assert lo < 0 < hi
    t_focal = report.detected[0][1]
    (at_focal,) = nullspace.degeneracy_report(nmap, nullspace.QuadratureGrid(x[:1], np.ones(1), (1,)), [t_focal])
    assert at_focal.min_rank < rec.immersion.n


def test_ppwave_focusing_from_curvature(records):
    # A+ = 0 but Ric(l+, l+) = 2 focuses the generators at t = +-pi/2
    rec = records["ppwave-slice"]
    nmap = nullspace.NullSpaceMap(rec.immersion, rec.frame, t_window=(-2, 2))
    x = rec.grid(2).nodes
    assert nullspace.predicted_focal(nmap, x, (-2, 2)) == [[] for _ in x]
    for row in nullspace.detect_focal(nmap, x, (-2.0, 2.0), n_scan=81):
        npt.assert_allclose(row, [-np.pi / 2, np.pi / 2], atol=1e-6)


def shift_family(domain):
    b = bump(domain)
    w = np.array([0.1, 0.05])
    return nullspace.InnerVariation(
        tau=lambda s, x: s * b(x),
        alpha=lambda s, x: np.asarray(x) + s * b(x)[..., None] * w,
    )


def test_invert_identity():
    rec = catalog.build("lightcone-flat")
    iv = nullspace.identity_inner(lambda s, x: s * bump(rec.domain)(x))
    grid = rec.grid(8)
    beta = nullspace.invert_alpha(iv, 0.3, grid)
    npt.assert_array_equal(beta(grid.nodes), grid.nodes)


@pytest.mark.parametrize("s", [-0.2, -0.05, 0.1, 0.2])
def test_invert_shift_family(s):
    rec = catalog.build("lightcone-flat")
    grid = rec.grid()
    assert nullspace.inverse_residual(shift_family(rec.domain), s, grid) <= 1e-10


def test_jacobian_threshold_triggers_for_large_s():
    rec = catalog.build("lightcone-flat")
    iv = shift_family(rec.domain)
    grid = rec.grid()
    dets = [np.min(nullspace.jacobian_determinant(iv, s, grid.nodes)) for s in (0.2, 2.0, 5.0, 10.0)]
    assert dets[0] > 0.9 and dets[-1] < 1e-3
    with pytest.raises(RankDeficiencyError):
        nullspace.invert_alpha(iv, 10.0, grid)


def test_find_delta_halves_until_invertible():
    rec = catalog.build("lightcone-flat")
    iv = shift_family(rec.domain).with_range(10.0)
    delta = nullspace.find_delta(iv, rec.grid(12))
    assert delta in {10.0 / 2**k for k in range(1, 12)}
    assert delta < 5.0


def test_newton_divergence_reported():
    rec = catalog.build("lightcone-flat")
    iv = nullspace.InnerVariation(tau=lambda s, x: 0 * x[..., 0], alpha=lambda s, x: np.asarray(x) ** 2)
    with pytest.raises((NewtonDivergenceError, np.linalg.LinAlgError)):
        nullspace._newton(iv, 0.1, np.array([[-0.3, 0.2]]))


def test_reparametrize_identity_keeps_tau():
    rec = catalog.build("horosphere")
    tau = lambda s, x: s * bump(rec.domain)(x)  # noqa: E731
    nmap = nullspace.NullSpaceMap(rec.immersion, rec.frame)
    grid = rec.grid(8)
    spec = nullspace.reparametrize(nmap, nullspace.identity_inner(tau), grid)
    for t in (-0.2, 0.1):
        npt.assert_allclose(spec.tau(t, grid.nodes), tau(t, grid.nodes), atol=1e-15)


@pytest.mark.parametrize("eid", ["lightcone-flat", "ppwave-slice"])
def test_volume_equality_and_composition(records, eid):
    rec = records[eid]
    grid = rec.grid()
    nmap = nullspace.NullSpaceMap(rec.immersion, rec.frame)
    iv = nullspace.random_inner_variation(rec.domain, np.random.default_rng(7))
    delta = nullspace.find_delta(iv, grid)
    spec = nullspace.reparametrize(nmap, iv, grid, delta)
    for s in np.linspace(-delta, delta, 5):
        vf = nullspace.volume_f(nmap, spec, s, grid)
        vg = nullspace.volume_g(nmap, iv, s, grid)
        assert abs(vf - vg) <= 1e-8
        assert nullspace.composition_residual(nmap, iv, spec, s, grid) <= 1e-9


def test_tau_outside_window_rejected(records):
    rec = records["lightcone-flat"]
    nmap = nullspace.NullSpaceMap(rec.immersion, rec.frame, t_window=(-0.01, 0.01))
    iv = nullspace.random_inner_variation(rec.domain, np.random.default_rng(0))
    with pytest.raises(GeometryError):
        nullspace.reparametrize(nmap, iv, rec.grid(8), 0.25)


def test_theorem_suite_small(records):
    report = nullspace.theorem_suite(records["horosphere"], seeds=[0, 1], grid=records["horosphere"].grid(12))
    assert report.passed
    assert all(abs(r.second_fd) <= 1e-6 for r in report.rows)
    assert "seed" in report.table()


def test_theorem_suite_requires_nec():
    rec = catalog.ppwave_slice(a=1.0)
    with pytest.raises(GeometryError):
        nullspace.theorem_suite(rec, seeds=[0], grid=rec.grid(6))

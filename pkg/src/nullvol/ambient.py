"""Local Lorentzian ambient geometry on a coordinate box.

Curvature follows

    R(X, Y)Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z,     R(X, Y, Z, W) = <R(X, Y)Z, W>,

so ``riemann[a, b, c, d] = R(d_a, d_b, d_c, d_d)`` and the Ricci tensor is
``Ric(X, Y) = sum_i eps_i R(X, e_i, e_i, Y)`` over an orthonormal frame with
``eps_1 = -1``. With these conventions a round sphere has positive Ricci
curvature and the null energy condition reads ``Ric(k, k) >= 0``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._numerics import hessian_fd, inner, jacobian_fd
from .errors import DomainExitError, GeometryError, SingularMetricError

DEFAULT_STEPS_PER_UNIT = 64


@dataclass(frozen=True)
class AmbientChart:
    """A Lorentzian metric on a closed coordinate box.

    ``metric_jacobian(x)[..., a, b, k] = d_k g_ab`` and
    ``metric_hessian(x)[..., a, b, k, l] = d_k d_l g_ab``. When they are not
    supplied the chart differentiates ``metric_at`` numerically. A chart with
    known Christoffel symbols may pass ``connection(x) -> (gamma, dgamma)``
    to skip the generic assembly.
    """

    name: str
    dim: int
    metric_at: Callable[[np.ndarray], np.ndarray]
    domain_box: np.ndarray
    metric_jacobian: Optional[Callable] = None
    metric_hessian: Optional[Callable] = None
    h_g: float = 1e-4
    time_direction: np.ndarray = field(default=None)
    flat: bool = False
    connection: Optional[Callable] = None

    @property
    def derivative_mode(self):
        return "closed-form" if self.metric_jacobian is not None else "finite-difference"

    @property
    def fd_margin(self):
        return 0.0 if self.metric_jacobian is not None else 10.0 * self.h_g

    def time_vector(self):
        if self.time_direction is None:
            t = np.zeros(self.dim)
            t[0] = 1.0
            return t
        return np.asarray(self.time_direction, dtype=float)

    def contains(self, x, margin=0.0):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain_box[:, 0], self.domain_box[:, 1]
        return np.all((x >= lo + margin) & (x <= hi - margin), axis=-1)

    def require_inside(self, x, margin=0.0):
        inside = self.contains(x, margin)
        if not np.all(inside):
            bad = np.asarray(x)[~inside] if np.ndim(inside) else np.asarray(x)
            raise DomainExitError(
                f"{self.name}: point {np.atleast_2d(bad)[0]} outside domain box "
                f"(margin {margin:g}); shrink the parameter box"
            )

    def metric(self, x):
        return self.metric_at(np.asarray(x, dtype=float))

    def dmetric(self, x):
        x = np.asarray(x, dtype=float)
        if self.metric_jacobian is not None:
            return self.metric_jacobian(x)
        return jacobian_fd(self.metric_at, x, self.h_g)

    def d2metric(self, x):
        x = np.asarray(x, dtype=float)
        if self.metric_hessian is not None:
            return self.metric_hessian(x)
        # Second differences lose twice the digits; a wider step balances truncation.
        return hessian_fd(self.metric_at, x, 10.0 * self.h_g)


def _inverse_metric(G):
    det = np.linalg.det(G)
    scale = np.max(np.abs(G), axis=(-2, -1)) ** G.shape[-1]
    if np.any(np.abs(det) <= 1e-13 * scale):
        raise SingularMetricError("metric matrix is singular at a sampled point")
    return np.linalg.inv(G)


def _connection(chart: AmbientChart, x, derivative: bool):
    if chart.connection is not None:
        gam, dgam = chart.connection(x)
        return gam, (dgam if derivative else None)
    G = chart.metric(x)
    D = G.shape[-1]
    batch = G.shape[:-2]
    Ginv = _inverse_metric(G)
    dG = chart.dmetric(x)
    # lowered[k, m, n] = d_m g_kn + d_n g_km - d_k g_mn
    lowered = np.swapaxes(dG, -1, -2) + dG - np.moveaxis(dG, -1, -3)
    gam = 0.5 * (Ginv @ lowered.reshape(batch + (D, D * D))).reshape(batch + (D,) * 3)
    if not derivative:
        return gam, None
    d2G = chart.d2metric(x)
    # d_p of the lowered combination: [k, m, n, p]
    dlowered = np.swapaxes(d2G, -2, -3) + d2G - np.moveaxis(d2G, -2, -4)
    # dGinv[p, l, k] = -(Ginv d_p G Ginv)[l, k]
    dGp = np.moveaxis(dG, -1, -3)
    dGinv = -(Ginv[..., None, :, :] @ dGp @ Ginv[..., None, :, :])
    term1 = dGinv @ lowered.reshape(batch + (1, D, D * D))  # [p, l, mn]
    term1 = np.moveaxis(term1.reshape(batch + (D, D, D, D)), -4, -1)
    term2 = (Ginv @ dlowered.reshape(batch + (D, D**3))).reshape(batch + (D,) * 4)
    return gam, 0.5 * (term1 + term2)


def christoffel(chart: AmbientChart, x):
    """Levi-Civita symbols ``gamma[..., l, m, n] = Gamma^l_{mn}``."""
    x = np.asarray(x, dtype=float)
    chart.require_inside(x, 2.0 * chart.fd_margin)
    if chart.flat:
        return np.zeros(x.shape[:-1] + (chart.dim,) * 3)
    return _connection(chart, x, False)[0]


def christoffel_derivative(chart: AmbientChart, x):
    """``dgamma[..., l, m, n, p] = d_p Gamma^l_{mn}`` from metric derivatives."""
    x = np.asarray(x, dtype=float)
    chart.require_inside(x, 4.0 * chart.fd_margin)
    if chart.flat:
        return np.zeros(x.shape[:-1] + (chart.dim,) * 4)
    return _connection(chart, x, True)[1]


def connection_with_derivative(chart: AmbientChart, x):
    """``(christoffel, christoffel_derivative)`` sharing one metric evaluation."""
    x = np.asarray(x, dtype=float)
    chart.require_inside(x, 4.0 * chart.fd_margin)
    if chart.flat:
        return np.zeros(x.shape[:-1] + (chart.dim,) * 3), np.zeros(x.shape[:-1] + (chart.dim,) * 4)
    return _connection(chart, x, True)


@dataclass(frozen=True)
class CurvatureSample:
    point: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray

    def symmetry_residuals(self):
        R = self.riemann
        scale = max(1.0, float(np.max(np.abs(R))))
        return {
            "antisym_12": float(np.max(np.abs(R + np.swapaxes(R, -4, -3)))) / scale,
            "antisym_34": float(np.max(np.abs(R + np.swapaxes(R, -2, -1)))) / scale,
            "pair_exchange": float(
                np.max(np.abs(R - np.einsum("...abcd->...cdab", R)))
            )
            / scale,
            "bianchi": float(
                np.max(
                    np.abs(
                        R
                        + np.einsum("...bcad->...abcd", R)
                        + np.einsum("...cabd->...abcd", R)
                    )
                )
            )
            / scale,
        }


def riemann_mixed(chart: AmbientChart, x):
    """``Rm[..., r, s, m, n] = R^r_{smn}`` with ``R(d_m, d_n) d_s = R^r_{smn} d_r``."""
    x = np.asarray(x, dtype=float)
    chart.require_inside(x, 4.0 * chart.fd_margin)
    if chart.flat:
        return np.zeros(x.shape[:-1] + (chart.dim,) * 4)
    gam, dgam = _connection(chart, x, True)
    return (
        np.einsum("...rnsm->...rsmn", dgam)
        - np.einsum("...rmsn->...rsmn", dgam)
        + np.einsum("...rml,...lns->...rsmn", gam, gam)
        - np.einsum("...rnl,...lms->...rsmn", gam, gam)
    )


def riemann(chart: AmbientChart, x) -> CurvatureSample:
    x = np.asarray(x, dtype=float)
    Rm = riemann_mixed(chart, x)
    G = chart.metric(x)
    # R(d_a, d_b, d_c, d_d) = g_{d r} R^r_{c a b}
    R = np.einsum("...dr,...rcab->...abcd", G, Rm)
    Ginv = np.linalg.inv(G)
    ric = np.einsum("...abcd,...bc->...ad", R, Ginv)
    ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
    return CurvatureSample(point=x, riemann=R, ricci=ric)


def orthonormal_frame(chart: AmbientChart, x):
    """Columns ``e_1..e_D`` with ``<e_1, e_1> = -1``, built by Gram-Schmidt.

    The time-like vector goes first (the negative eigendirection of the
    metric, oriented against the chart's time vector), then the coordinate
    basis; the one coordinate vector that becomes dependent is dropped.
    """
    x = np.asarray(x, dtype=float)
    G = chart.metric(x)
    D = chart.dim
    w, V = np.linalg.eigh(G)
    if np.sum(w < 0) != 1:
        raise SingularMetricError(f"metric at {x} is not Lorentzian (eigenvalues {w})")
    t0 = V[:, np.argmin(w)]
    if inner(G, t0, chart.time_vector()) > 0:
        t0 = -t0
    frame = [t0 / math.sqrt(-inner(G, t0, t0))]
    signs = [-1.0]
    for k in range(D):
        v = np.zeros(D)
        v[k] = 1.0
        for e, s in zip(frame, signs):
            v = v - s * inner(G, v, e) * e
        nrm = inner(G, v, v)
        if nrm <= 1e-10:
            continue
        frame.append(v / math.sqrt(nrm))
        signs.append(1.0)
        if len(frame) == D:
            break
    if len(frame) != D:
        raise SingularMetricError(f"Gram-Schmidt failed to span the tangent space at {x}")
    return np.stack(frame, axis=-1)


def ricci(chart: AmbientChart, x, X, Y):
    """``-R(X, e_1, e_1, Y) + sum_{i>1} R(X, e_i, e_i, Y)`` in an orthonormal frame."""
    x = np.asarray(x, dtype=float)
    R = riemann(chart, x).riemann
    E = orthonormal_frame(chart, x)
    total = 0.0
    for i in range(chart.dim):
        e = E[:, i]
        sign = -1.0 if i == 0 else 1.0
        total += sign * np.einsum("abcd,a,b,c,d->", R, X, e, e, Y)
    return float(total)


def ricci_tensor(chart: AmbientChart, x):
    """Metric contraction of :func:`riemann` (batched)."""
    return riemann(chart, x).ricci


def null_directions(count):
    """Deterministic unit spatial directions in 3 dimensions (Fibonacci lattice)."""
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    r = np.sqrt(1.0 - z**2)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([z, r * np.cos(phi), r * np.sin(phi)], axis=-1)


def _spatial_directions(dim_space, count):
    if dim_space == 1:
        return np.array([[1.0], [-1.0]])
    if dim_space == 2:
        ang = 2.0 * math.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    if dim_space == 3:
        return null_directions(count)
    from scipy.stats import norm, qmc

    pts = qmc.Halton(d=dim_space, scramble=False).random(count + 1)[1:]
    g = norm.ppf(pts)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


@dataclass(frozen=True)
class NECReport:
    min_value: float
    violating_points: np.ndarray
    tol: float
    n_directions: int

    @property
    def passed(self):
        return self.min_value >= -self.tol


def nec_check(chart: AmbientChart, points, n_directions=64, tol=1e-8) -> NECReport:
    """Minimum of ``Ric(k, k)`` over sampled null directions ``k = e_1 + s``.

    ``s`` runs over unit spatial vectors of the orthonormal frame, so each
    sampled ``k`` is a boost of a fixed null vector with time component 1.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dirs = _spatial_directions(chart.dim - 1, max(32, n_directions))
    ric = riemann(chart, points).ricci
    mins = np.empty(len(points))
    for p, x in enumerate(points):
        E = orthonormal_frame(chart, x)
        k = E[:, 0][None, :] + dirs @ E[:, 1:].T
        vals = np.einsum("ka,ab,kb->k", k, ric[p], k)
        mins[p] = vals.min()
    bad = points[mins < -tol]
    return NECReport(
        min_value=float(mins.min()),
        violating_points=bad,
        tol=tol,
        n_directions=len(dirs),
    )


@dataclass(frozen=True)
class GeodesicState:
    position: np.ndarray
    velocity: np.ndarray
    affine_parameter: float


def _geodesic_rhs(chart, x, v, dx, dv):
    # geodesic_flow checks the domain once per step, so the stages skip it
    if dx is None:
        gam = _connection(chart, x, False)[0]
        gv = (v[..., None, None, :] @ gam)[..., 0, :]
        return v, -(gv @ v[..., None])[..., 0], None, None
    gam, dgam = _connection(chart, x, True)
    gv = (v[..., None, None, :] @ gam)[..., 0, :]  # [l, n] = Gamma^l_mn v^m
    acc = -(gv @ v[..., None])[..., 0]
    dgv = (v[..., None, None, None, :] @ np.moveaxis(dgam, -3, -2))[..., 0, :]  # [l, n, p]
    dgvv = (v[..., None, None, :] @ dgv)[..., 0, :]  # [l, p]
    dacc = -(dgvv @ dx) - 2.0 * (gv @ dv)
    return v, acc, dv, dacc


def geodesic_flow(chart: AmbientChart, x0, v0, steps, dx0=None, dv0=None):
    """Integrate the geodesic equation over affine parameter [0, 1] with RK4.

    Batched over leading axes. ``dx0, dv0`` of shape ``(..., D, m)`` are
    perturbations of the initial data; they are carried through the
    linearized (Jacobi) equation so the derivative of the endpoint with
    respect to any initial-data parameter is exact up to integrator error.
    Returns ``(x1, v1, dx1, dv1)``.
    """
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    dx = None if dx0 is None else np.array(dx0, dtype=float)
    dv = None if dv0 is None else np.array(dv0, dtype=float)
    steps = int(steps)
    if steps < 1:
        raise GeometryError("geodesic integration needs at least one step")
    if steps > 10**6:
        raise GeometryError("step-size underflow: more than 1e6 geodesic steps requested")
    h = 1.0 / steps
    margin = 4.0 * chart.fd_margin
    chart.require_inside(x, margin)
    linear = dx is not None
    if chart.flat:
        # Affine coordinates: geodesics and Jacobi fields are straight lines.
        x1 = x + v
        if not np.all(chart.contains(x1, margin)):
            raise DomainExitError(f"{chart.name}: geodesic left the domain box")
        return x1, v, (dx + dv) if linear else None, dv

    for _ in range(steps):
        k1 = _geodesic_rhs(chart, x, v, dx, dv)
        s2 = [a + 0.5 * h * b if a is not None else None for a, b in zip((x, v, dx, dv), k1)]
        k2 = _geodesic_rhs(chart, *s2)
        s3 = [a + 0.5 * h * b if a is not None else None for a, b in zip((x, v, dx, dv), k2)]
        k3 = _geodesic_rhs(chart, *s3)
        s4 = [a + h * b if a is not None else None for a, b in zip((x, v, dx, dv), k3)]
        k4 = _geodesic_rhs(chart, *s4)
        x = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        v = v + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if linear:
            dx = dx + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            dv = dv + h / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        if not np.all(chart.contains(x, margin)):
            raise DomainExitError(f"{chart.name}: geodesic left the domain box")
    return x, v, dx, dv


def steps_for(affine_length, steps_per_unit=DEFAULT_STEPS_PER_UNIT, minimum=8):
    return max(minimum, int(math.ceil(steps_per_unit * float(affine_length))))


def exp_map(chart: AmbientChart, p, v, t_max, steps_per_unit=DEFAULT_STEPS_PER_UNIT):
    """``exp_p(t_max v)`` as the geodesic state at affine parameter ``t_max``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    length = abs(t_max) * max(1.0, float(np.max(np.linalg.norm(v, axis=-1))))
    steps = steps_for(length, steps_per_unit)
    x1, w1, _, _ = geodesic_flow(chart, p, t_max * v, steps)
    vel = w1 / t_max if t_max != 0 else v.copy()
    return GeodesicState(position=x1, velocity=vel, affine_parameter=float(t_max))


# --------------------------------------------------------------------------
# Built-in charts


def minkowski(dim=4, half_width=50.0, flat=True):
    """Minkowski space; ``flat=False`` forces the generic curvature and RK4 paths."""
    eta = np.diag([-1.0] + [1.0] * (dim - 1))

    def metric_at(x):
        return np.broadcast_to(eta, np.shape(x)[:-1] + (dim, dim)).copy()

    def jac(x):
        return np.zeros(np.shape(x)[:-1] + (dim,) * 3)

    def hess(x):
        return np.zeros(np.shape(x)[:-1] + (dim,) * 4)

    box = np.array([[-half_width, half_width]] * dim)
    return AmbientChart(f"minkowski({dim})", dim, metric_at, box, jac, hess, flat=flat)


def ppwave(a=-1.0, half_width=10.0):
    """``ds^2 = 2 du dv + a (x^2 + y^2) du^2 + dx^2 + dy^2`` in coordinates (u, v, x, y)."""
    a = float(a)

    def metric_at(x):
        x = np.asarray(x, dtype=float)
        G = np.zeros(x.shape[:-1] + (4, 4))
        G[..., 0, 0] = a * (x[..., 2] ** 2 + x[..., 3] ** 2)
        G[..., 0, 1] = G[..., 1, 0] = 1.0
        G[..., 2, 2] = G[..., 3, 3] = 1.0
        return G

    def jac(x):
        x = np.asarray(x, dtype=float)
        dG = np.zeros(x.shape[:-1] + (4, 4, 4))
        dG[..., 0, 0, 2] = 2.0 * a * x[..., 2]
        dG[..., 0, 0, 3] = 2.0 * a * x[..., 3]
        return dG

    def hess(x):
        x = np.asarray(x, dtype=float)
        d2G = np.zeros(x.shape[:-1] + (4, 4, 4, 4))
        d2G[..., 0, 0, 2, 2] = 2.0 * a
        d2G[..., 0, 0, 3, 3] = 2.0 * a
        return d2G

    def connection(x):
        x = np.asarray(x, dtype=float)
        gam = np.zeros(x.shape[:-1] + (4, 4, 4))
        dgam = np.zeros(x.shape[:-1] + (4, 4, 4, 4))
        for k in (2, 3):
            gam[..., 1, 0, k] = gam[..., 1, k, 0] = a * x[..., k]
            gam[..., k, 0, 0] = -a * x[..., k]
            dgam[..., 1, 0, k, k] = dgam[..., 1, k, 0, k] = a
            dgam[..., k, 0, 0, k] = -a
        return gam, dgam

    box = np.array([[-half_width, half_width]] * 4)
    # du - dv is time-like wherever a (x^2 + y^2) < 2.
    return AmbientChart(
        f"ppwave({a:g})",
        4,
        metric_at,
        box,
        jac,
        hess,
        time_direction=np.array([1.0, -1.0, 0, 0]),
        connection=connection,
    )


CONFORMAL_FACTORS = {
    "linear": lambda x: 0.1 * x[..., 1],
    "quadratic": lambda x: 0.05 * (x[..., 1] ** 2 + x[..., 2] ** 2),
}


def conformal(omega_id="linear", dim=4, half_width=5.0, h_g=1e-4):
    """``g = exp(2 omega) eta``; derivatives are taken numerically."""
    omega = CONFORMAL_FACTORS[omega_id]
    eta = np.diag([-1.0] + [1.0] * (dim - 1))

    def metric_at(x):
        x = np.asarray(x, dtype=float)
        return np.exp(2.0 * omega(x))[..., None, None] * eta

    box = np.array([[-half_width, half_width]] * dim)
    return AmbientChart(f"conformal({omega_id})", dim, metric_at, box, h_g=h_g)


_CHART_RE = re.compile(r"^\s*(\w+)\s*\(\s*([^)]*)\s*\)\s*$")


def chart_from_name(name: str) -> AmbientChart:
    """Parse ``minkowski(dim)``, ``ppwave(a)`` or ``conformal(omega_id)``."""
    m = _CHART_RE.match(name)
    if not m:
        raise ValueError(f"unrecognized chart name {name!r}")
    kind, arg = m.group(1), m.group(2).strip()
    if kind == "minkowski":
        return minkowski(int(arg) if arg else 4)
    if kind == "ppwave":
        return ppwave(float(arg) if arg else -1.0)
    if kind == "conformal":
        return conformal(arg or "linear")
    raise ValueError(f"unknown chart family {kind!r}")


def check_signature(chart: AmbientChart, points, sym_tol=1e-14):
    """Verify symmetry and (-, +, ..., +) signature at every sample."""
    G = chart.metric(np.atleast_2d(points))
    asym = float(np.max(np.abs(G - np.swapaxes(G, -1, -2))))
    if asym > sym_tol:
        raise SingularMetricError(f"metric asymmetric by {asym:.3e}")
    w = np.linalg.eigvalsh(G)
    neg = np.sum(w < 0, axis=-1)
    if np.any(neg != 1) or np.any(np.abs(w) < 1e-14):
        raise SingularMetricError("metric is not Lorentzian at some sample")
    return True

"""Closed-form marginally trapped surfaces and two control surfaces.

Each builder returns an :class:`ExampleRecord` holding the chart, the
immersion with exact partial derivatives, the prescribed null frame and a
list of expected facts that :func:`verify` evaluates numerically.

Catalog ids (all n = 2):

``lightcone-flat``
    ``p = e^{k u} ((1 + u^2 + v^2)/2, u, v, (u^2 + v^2 - 1)/2)`` on the light
    cone of Minkowski R^4_1, box [-1/2, 1/2]^2. The induced metric is
    ``e^{2 k u}(du^2 + dv^2)``, flat for every ``k``; ``l+`` is the dual map
    and ``l- = -2p``. With the default ``k = 1`` the shape operator ``A+`` is
    traceless but nonzero, so the null-space has focal points at
    ``t = +-2 e^{2u}``.
``euclid-minimal-catenoid``
    ``(0, catenoid)`` with ``l+- = (1, +-nu)``, box [-1, 1] x [0, 3].
``zmc-plane``
    the space-like plane ``t = 0.3 x`` of R^3_1 placed as ``(f, 0)``,
    ``l+- = (nu, +-1)``, box [-1, 1]^2.
``horosphere``
    ``{<x, w> = -1}`` in H^3 with ``w = (1, 0, 0, 1)``; ``l+ = nu + f = w``.
``desitter-flat-slice``
    ``{<x, w> = -1}`` in S^3_1; ``l+ = -nu - f = w``.
``ppwave-slice``
    the slice ``u = v = 0`` of ``ppwave(-1)``; totally geodesic with
    ``l+ = d_u + (x^2 + y^2)/2 d_v``, ``l- = -2 d_v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._numerics import QuadratureGrid, inner
from .ambient import AmbientChart, minkowski, nec_check, ppwave, riemann
from .immersion import Immersion, ParamDomain, scalar_curvature, surface_data
from .nullframe import NullNormalFrame, dual_map, frame_residuals, shape_operator, theta


@dataclass(frozen=True)
class Fact:
    name: str
    tol: float
    target: Optional[float] = None


@dataclass
class ExampleRecord:
    id: str
    chart: AmbientChart
    immersion: Immersion
    frame: NullNormalFrame
    expected: list
    description: str = ""
    alternate_frame: Optional[NullNormalFrame] = None
    marginally_trapped: bool = True
    extras: dict = field(default_factory=dict)

    @property
    def domain(self):
        return self.immersion.domain

    def grid(self, order=24):
        return self.domain.grid(order)


def _stack(*cols):
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


def _tangent_pair(a, b):
    return np.stack([a, b], axis=-1)


def _hessian_from(uu, uv, vv):
    row0 = np.stack([uu, uv], axis=-1)
    row1 = np.stack([uv, vv], axis=-1)
    return np.stack([row0, row1], axis=-2)


# ---------------------------------------------------------------- light cone


def lightcone_flat(kappa=1.0) -> ExampleRecord:
    chart = minkowski(4)
    domain = ParamDomain(np.array([[-0.5, 0.5], [-0.5, 0.5]]))
    k = float(kappa)

    def p0(x):
        u, v = x[..., 0], x[..., 1]
        r2 = u * u + v * v
        return _stack(0.5 * (1 + r2), u, v, 0.5 * (r2 - 1))

    def p0_u(x):
        u = x[..., 0]
        return _stack(u, np.ones_like(u), np.zeros_like(u), u)

    def p0_v(x):
        v = x[..., 1]
        return _stack(v, np.zeros_like(v), np.ones_like(v), v)

    c = np.array([1.0, 0.0, 0.0, 1.0])

    def position(x):
        return np.exp(k * x[..., 0])[..., None] * p0(x)

    def jacobian(x):
        e = np.exp(k * x[..., 0])[..., None]
        return _tangent_pair(e * (p0_u(x) + k * p0(x)), e * p0_v(x))

    def hessian(x):
        e = np.exp(k * x[..., 0])[..., None]
        cc = np.broadcast_to(c, x.shape[:-1] + (4,))
        uu = e * (cc + 2 * k * p0_u(x) + k * k * p0(x))
        uv = e * (k * p0_v(x))
        vv = e * cc
        return _hessian_from(uu, uv, vv)

    imm = Immersion(chart, domain, position, jacobian, hessian, name="lightcone-flat")
    q_base = np.array([-1.0, 0.0, 0.0, -1.0])

    def ell_plus(x):
        # dual map in closed form: e^{-h} (q0 - grad h . d p0 - |grad h|^2/2 p0)
        e = np.exp(-k * x[..., 0])[..., None]
        return e * (q_base - k * p0_u(x) - 0.5 * k * k * p0(x))

    def ell_minus(x):
        return -2.0 * position(x)

    frame = NullNormalFrame(ell_plus, ell_minus)
    expected = [
        Fact("frame_normalized", 1e-10),
        Fact("scalar_curvature_zero", 1e-8),
        Fact("theta_plus_zero", 1e-7),
        Fact("H_equals_minus_n_q", 1e-7),
    ]
    if k == 0.0:
        expected.append(Fact("induced_metric_identity", 1e-9))
    return ExampleRecord(
        "lightcone-flat",
        chart,
        imm,
        frame,
        expected,
        description="flat space-like surface in the light cone of R^4_1 (l+ = dual map)",
        extras={"kappa": k},
    )


# ------------------------------------------------------------ Euclidean minimal


def euclid_minimal_catenoid() -> ExampleRecord:
    chart = minkowski(4)
    domain = ParamDomain(np.array([[-1.0, 1.0], [0.0, 3.0]]))

    def position(x):
        s, p = x[..., 0], x[..., 1]
        return _stack(np.zeros_like(s), np.cosh(s) * np.cos(p), np.cosh(s) * np.sin(p), s)

    def jacobian(x):
        s, p = x[..., 0], x[..., 1]
        z = np.zeros_like(s)
        fs = _stack(z, np.sinh(s) * np.cos(p), np.sinh(s) * np.sin(p), np.ones_like(s))
        fp = _stack(z, -np.cosh(s) * np.sin(p), np.cosh(s) * np.cos(p), z)
        return _tangent_pair(fs, fp)

    def hessian(x):
        s, p = x[..., 0], x[..., 1]
        z = np.zeros_like(s)
        ss = _stack(z, np.cosh(s) * np.cos(p), np.cosh(s) * np.sin(p), z)
        sp = _stack(z, -np.sinh(s) * np.sin(p), np.sinh(s) * np.cos(p), z)
        pp = _stack(z, -np.cosh(s) * np.cos(p), -np.cosh(s) * np.sin(p), z)
        return _hessian_from(ss, sp, pp)

    def nu(x):
        s, p = x[..., 0], x[..., 1]
        ch = np.cosh(s)
        return _stack(np.cos(p) / ch, np.sin(p) / ch, -np.tanh(s))

    def ell(sign):
        def f(x):
            n = nu(x)
            return np.concatenate([np.ones(n.shape[:-1] + (1,)), sign * n], axis=-1)

        return f

    imm = Immersion(chart, domain, position, jacobian, hessian, name="euclid-minimal-catenoid")
    frame = NullNormalFrame(ell(1.0), ell(-1.0))
    return ExampleRecord(
        "euclid-minimal-catenoid",
        chart,
        imm,
        frame,
        [Fact("frame_normalized", 1e-10), Fact("H_zero", 1e-7), Fact("theta_plus_zero", 1e-7)],
        description="(0, catenoid) in R^4_1 with l+- = (1, +-nu)",
        alternate_frame=frame.swapped(),
    )


# --------------------------------------------------------- zero mean curvature


def zmc_plane(slope=0.3) -> ExampleRecord:
    chart = minkowski(4)
    domain = ParamDomain(np.array([[-1.0, 1.0], [-1.0, 1.0]]))
    a = float(slope)
    tu = np.array([a, 1.0, 0.0, 0.0])
    tv = np.array([0.0, 0.0, 1.0, 0.0])

    def position(x):
        u, v = x[..., 0], x[..., 1]
        return _stack(a * u, u, v, np.zeros_like(u))

    def jacobian(x):
        shape = x.shape[:-1]
        return _tangent_pair(np.broadcast_to(tu, shape + (4,)), np.broadcast_to(tv, shape + (4,)))

    def hessian(x):
        return np.zeros(x.shape[:-1] + (4, 2, 2))

    nu = np.array([1.0, a, 0.0]) / math.sqrt(1.0 - a * a)
    lp = np.concatenate([nu, [1.0]])
    lm = np.concatenate([nu, [-1.0]])

    def const(vec):
        return lambda x: np.broadcast_to(vec, x.shape[:-1] + (4,)).copy()

    imm = Immersion(chart, domain, position, jacobian, hessian, name="zmc-plane")
    frame = NullNormalFrame(
        const(lp),
        const(lm),
        plus_jacobian=lambda x: np.zeros(x.shape[:-1] + (4, 2)),
        minus_jacobian=lambda x: np.zeros(x.shape[:-1] + (4, 2)),
    )
    return ExampleRecord(
        "zmc-plane",
        chart,
        imm,
        frame,
        [Fact("frame_normalized", 1e-10), Fact("H_zero", 1e-7), Fact("A_plus_zero", 1e-7)],
        description="space-like plane t = 0.3 x of R^3_1 as (f, 0) with l+- = (nu, +-1)",
        alternate_frame=frame.swapped(),
    )


# ---------------------------------------------------- hyperbolic / de Sitter


W_NULL = np.array([1.0, 0.0, 0.0, 1.0])


def _paraboloid(offset0, offset3):
    def position(x):
        u, v = x[..., 0], x[..., 1]
        r2 = u * u + v * v
        return _stack(offset0 + 0.5 * r2, u, v, offset3 + 0.5 * r2)

    def jacobian(x):
        u, v = x[..., 0], x[..., 1]
        o, z = np.ones_like(u), np.zeros_like(u)
        return _tangent_pair(_stack(u, o, z, u), _stack(v, z, o, v))

    def hessian(x):
        w = np.broadcast_to(W_NULL, x.shape[:-1] + (4,))
        z = np.zeros_like(w)
        return _hessian_from(w, z, w)

    return position, jacobian, hessian


def horosphere() -> ExampleRecord:
    chart = minkowski(4)
    domain = ParamDomain(np.array([[-1.0, 1.0], [-1.0, 1.0]]))
    position, jacobian, hessian = _paraboloid(1.0, 0.0)
    imm = Immersion(chart, domain, position, jacobian, hessian, name="horosphere")

    def nu(x):
        return W_NULL - position(x)

    frame = NullNormalFrame(
        lambda x: nu(x) + position(x),
        lambda x: -nu(x) + position(x),
        plus_jacobian=lambda x: np.zeros(x.shape[:-1] + (4, 2)),
    )
    return ExampleRecord(
        "horosphere",
        chart,
        imm,
        frame,
        [
            Fact("frame_normalized", 1e-10),
            Fact("theta_plus_zero", 1e-7),
            Fact("H_equals_n_ell_plus", 1e-7),
            Fact("A_plus_zero", 1e-7),
            Fact("theta_minus", 1e-7, target=-4.0),
            Fact("on_hyperbolic_space", 1e-12),
        ],
        description="horosphere <x, w> = -1 in H^3 with l+ = nu + f",
    )


def desitter_flat_slice() -> ExampleRecord:
    chart = minkowski(4)
    domain = ParamDomain(np.array([[-1.0, 1.0], [-1.0, 1.0]]))
    position, jacobian, hessian = _paraboloid(0.0, -1.0)
    imm = Immersion(chart, domain, position, jacobian, hessian, name="desitter-flat-slice")

    def nu(x):
        return -W_NULL - position(x)

    frame = NullNormalFrame(
        lambda x: -nu(x) - position(x),
        lambda x: -nu(x) + position(x),
        plus_jacobian=lambda x: np.zeros(x.shape[:-1] + (4, 2)),
    )
    return ExampleRecord(
        "desitter-flat-slice",
        chart,
        imm,
        frame,
        [
            Fact("frame_normalized", 1e-10),
            Fact("theta_plus_zero", 1e-7),
            Fact("H_equals_n_ell_plus", 1e-7),
            Fact("A_plus_zero", 1e-7),
            Fact("on_de_sitter_space", 1e-12),
        ],
        description="flat slice <x, w> = -1 of S^3_1 with l+ = -nu - f",
    )


# ------------------------------------------------------------------ pp-wave


def ppwave_slice(a=-1.0, u0=0.0, v0=0.0) -> ExampleRecord:
    chart = ppwave(a)
    domain = ParamDomain(np.array([[-1.0, 1.0], [-1.0, 1.0]]))

    def position(x):
        X, Y = x[..., 0], x[..., 1]
        return _stack(np.full_like(X, u0), np.full_like(X, v0), X, Y)

    def jacobian(x):
        shape = x.shape[:-1]
        ex = np.broadcast_to(np.array([0.0, 0.0, 1.0, 0.0]), shape + (4,))
        ey = np.broadcast_to(np.array([0.0, 0.0, 0.0, 1.0]), shape + (4,))
        return _tangent_pair(ex, ey)

    def hessian(x):
        return np.zeros(x.shape[:-1] + (4, 2, 2))

    def ell_plus(x):
        X, Y = x[..., 0], x[..., 1]
        z = np.zeros_like(X)
        return _stack(np.ones_like(X), -0.5 * a * (X * X + Y * Y), z, z)

    def ell_plus_jac(x):
        X, Y = x[..., 0], x[..., 1]
        out = np.zeros(x.shape[:-1] + (4, 2))
        out[..., 1, 0] = -a * X
        out[..., 1, 1] = -a * Y
        return out

    def ell_minus(x):
        return np.broadcast_to(np.array([0.0, -2.0, 0.0, 0.0]), x.shape[:-1] + (4,)).copy()

    imm = Immersion(chart, domain, position, jacobian, hessian, name="ppwave-slice")
    frame = NullNormalFrame(
        ell_plus,
        ell_minus,
        plus_jacobian=ell_plus_jac,
        minus_jacobian=lambda x: np.zeros(x.shape[:-1] + (4, 2)),
    )
    return ExampleRecord(
        "ppwave-slice",
        chart,
        imm,
        frame,
        [
            Fact("frame_normalized", 1e-10),
            Fact("II_zero", 1e-8),
            Fact("theta_plus_zero", 1e-8),
            Fact("theta_minus_zero", 1e-8),
            Fact("ricci_ell_plus_positive", 0.0),
            Fact("nec_passes", 1e-8),
        ],
        description="totally geodesic slice u = v = 0 of the pp-wave with H = -(x^2 + y^2)",
    )


# ------------------------------------------------------- controls (not catalogued)


def sphere_slice(radius=1.0) -> ExampleRecord:
    """Round sphere ``(0, r S^2)``: space-like but untrapped."""
    chart = minkowski(4)
    domain = ParamDomain(np.array([[0.3, math.pi - 0.3], [0.0, 2 * math.pi - 0.3]]))
    r = float(radius)

    def radial(x):
        th, ph = x[..., 0], x[..., 1]
        return _stack(np.zeros_like(th), np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th))

    def position(x):
        return r * radial(x)

    def jacobian(x):
        th, ph = x[..., 0], x[..., 1]
        z = np.zeros_like(th)
        ft = r * _stack(z, np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th))
        fp = r * _stack(z, -np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), z)
        return _tangent_pair(ft, fp)

    def hessian(x):
        th, ph = x[..., 0], x[..., 1]
        z = np.zeros_like(th)
        tt = -r * radial(x)
        tp = r * _stack(z, -np.cos(th) * np.sin(ph), np.cos(th) * np.cos(ph), z)
        pp = r * _stack(z, -np.sin(th) * np.cos(ph), -np.sin(th) * np.sin(ph), z)
        return _hessian_from(tt, tp, pp)

    T = np.array([1.0, 0.0, 0.0, 0.0])
    imm = Immersion(chart, domain, position, jacobian, hessian, name="sphere-slice")
    frame = NullNormalFrame(lambda x: T + radial(x), lambda x: T - radial(x))
    return ExampleRecord(
        "sphere-slice",
        chart,
        imm,
        frame,
        [Fact("frame_normalized", 1e-10)],
        description="round sphere in a space slice (negative control)",
        marginally_trapped=False,
        extras={"radius": r, "time_normal": T, "radial": radial},
    )


def plane_slice() -> ExampleRecord:
    """Flat unit square ``(0, 0, u, v)``: totally geodesic, degenerately trapped."""
    chart = minkowski(4)
    domain = ParamDomain(np.array([[0.0, 1.0], [0.0, 1.0]]))

    def position(x):
        u, v = x[..., 0], x[..., 1]
        return _stack(np.zeros_like(u), np.zeros_like(u), u, v)

    def jacobian(x):
        shape = x.shape[:-1]
        return _tangent_pair(
            np.broadcast_to(np.array([0.0, 0.0, 1.0, 0.0]), shape + (4,)),
            np.broadcast_to(np.array([0.0, 0.0, 0.0, 1.0]), shape + (4,)),
        )

    lp = np.array([1.0, 1.0, 0.0, 0.0])
    lm = np.array([1.0, -1.0, 0.0, 0.0])
    imm = Immersion(
        chart, domain, position, jacobian, lambda x: np.zeros(x.shape[:-1] + (4, 2, 2)), name="plane-slice"
    )
    frame = NullNormalFrame(
        lambda x: np.broadcast_to(lp, x.shape[:-1] + (4,)).copy(),
        lambda x: np.broadcast_to(lm, x.shape[:-1] + (4,)).copy(),
        plus_jacobian=lambda x: np.zeros(x.shape[:-1] + (4, 2)),
        minus_jacobian=lambda x: np.zeros(x.shape[:-1] + (4, 2)),
    )
    return ExampleRecord(
        "plane-slice",
        chart,
        imm,
        frame,
        [Fact("frame_normalized", 1e-10), Fact("II_zero", 1e-12)],
        description="flat plane in a space slice (control)",
    )


BUILDERS: dict[str, Callable[[], ExampleRecord]] = {
    "lightcone-flat": lightcone_flat,
    "euclid-minimal-catenoid": euclid_minimal_catenoid,
    "zmc-plane": zmc_plane,
    "horosphere": horosphere,
    "desitter-flat-slice": desitter_flat_slice,
    "ppwave-slice": ppwave_slice,
}

CATALOG_IDS = tuple(BUILDERS)
CONTROL_BUILDERS = {"sphere-slice": sphere_slice, "plane-slice": plane_slice}


def build(example_id: str) -> ExampleRecord:
    if example_id in BUILDERS:
        return BUILDERS[example_id]()
    if example_id in CONTROL_BUILDERS:
        return CONTROL_BUILDERS[example_id]()
    raise KeyError(f"unknown example id {example_id!r}; known: {', '.join(CATALOG_IDS)}")


# ------------------------------------------------------------------ verify


@dataclass(frozen=True)
class FactResult:
    name: str
    residual: float
    tol: float

    @property
    def passed(self):
        if self.name == "ricci_ell_plus_positive":
            return self.residual > self.tol
        return self.residual <= self.tol


def _fact_residual(rec: ExampleRecord, fact: Fact, x):
    imm, frame = rec.immersion, rec.frame
    n = imm.n
    if fact.name == "frame_normalized":
        return max(frame_residuals(imm, frame, x).values())
    if fact.name == "scalar_curvature_zero":
        return float(np.max(np.abs(scalar_curvature(imm, x))))
    if fact.name == "induced_metric_identity":
        d = surface_data(imm, x)
        return float(np.max(np.abs(d.g - np.eye(n))))
    if fact.name == "theta_plus_zero":
        return float(np.max(np.abs(theta(imm, frame, x, "+"))))
    if fact.name == "theta_minus_zero":
        return float(np.max(np.abs(theta(imm, frame, x, "-"))))
    if fact.name == "theta_minus":
        return float(np.max(np.abs(theta(imm, frame, x, "-") - fact.target)))
    if fact.name == "H_zero":
        return float(np.max(np.abs(surface_data(imm, x).H)))
    if fact.name == "II_zero":
        return float(np.max(np.abs(surface_data(imm, x).II)))
    if fact.name == "H_equals_minus_n_q":
        return float(np.max(np.abs(surface_data(imm, x).H + n * dual_map(imm, x))))
    if fact.name == "H_equals_n_ell_plus":
        return float(np.max(np.abs(surface_data(imm, x).H - n * frame.plus(x))))
    if fact.name == "A_plus_zero":
        return float(np.max(np.abs(shape_operator(imm, frame, x, "+"))))
    if fact.name == "ricci_ell_plus_positive":
        pos = imm.position(x)
        ric = riemann(imm.chart, pos).ricci
        lp = frame.plus(x)
        return float(np.min(np.einsum("...a,...ab,...b->...", lp, ric, lp)))
    if fact.name == "nec_passes":
        report = nec_check(imm.chart, imm.position(x[:: max(1, len(x) // 16)]))
        return max(0.0, -report.min_value)
    if fact.name == "on_hyperbolic_space":
        pos = imm.position(x)
        return float(np.max(np.abs(inner(imm.chart.metric(pos), pos, pos) + 1.0)))
    if fact.name == "on_de_sitter_space":
        pos = imm.position(x)
        return float(np.max(np.abs(inner(imm.chart.metric(pos), pos, pos) - 1.0)))
    raise KeyError(f"no checker for fact {fact.name!r}")


def verify(rec: ExampleRecord, grid: Optional[QuadratureGrid] = None) -> list:
    """Evaluate every expected fact of ``rec`` at the grid nodes."""
    grid = grid if grid is not None else rec.grid()
    return [FactResult(f.name, _fact_residual(rec, f, grid.nodes), f.tol) for f in rec.expected]


def describe(example_id: str) -> dict:
    rec = build(example_id)
    return {
        "id": rec.id,
        "description": rec.description,
        "chart": rec.chart.name,
        "box": rec.domain.box.tolist(),
        "frame": rec.frame.provenance,
        "expected": [f.name for f in rec.expected],
        "marginally_trapped": rec.marginally_trapped,
    }

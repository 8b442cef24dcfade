"""Space-like codimension-2 immersions of a parameter box into an ambient chart.

Array conventions: points ``x`` have shape ``(..., n)``; ambient vectors
``(..., D)``; the Jacobian ``J[..., a, i] = d_i f^a``; the Hessian
``Hf[..., a, i, j]``; the second fundamental form ``II[..., a, i, j]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._numerics import QuadratureGrid, hessian_fd, inner, jacobian_fd
from .ambient import AmbientChart, christoffel
from .errors import NotSpacelikeError, RankDeficiencyError


@dataclass(frozen=True)
class ParamDomain:
    """Closed parameter box; variations vanish on a collar of width ``boundary_margin``."""

    box: np.ndarray
    boundary_margin: float = 0.0

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float)
        object.__setattr__(self, "box", box)
        sides = box[:, 1] - box[:, 0]
        if np.any(sides <= 0):
            raise ValueError("degenerate parameter box")
        if self.boundary_margin >= 0.5 * sides.min():
            raise ValueError("boundary margin must be less than half the shortest side")

    @property
    def n(self):
        return self.box.shape[0]

    @property
    def center(self):
        return self.box.mean(axis=1)

    def collar_coordinates(self, x):
        """Affine map of the box minus its collar onto [-1, 1]^n."""
        half = 0.5 * (self.box[:, 1] - self.box[:, 0]) - self.boundary_margin
        return (np.asarray(x, dtype=float) - self.center) / half

    def grid(self, order=24):
        return QuadratureGrid.gauss_legendre(self.box, order)


class Immersion:
    """A parametric map ``x -> f(x)`` into ``chart`` with derivatives.

    Closed-form partials can be passed as ``jacobian`` and ``hessian``;
    otherwise central differences with one Richardson level are used
    (``h_f`` for first derivatives, ``10 h_f`` for second ones).
    ``jet`` may return ``(position, jacobian)`` together when the two share
    expensive work, as deformed immersions do.
    """

    def __init__(
        self,
        chart: AmbientChart,
        domain: ParamDomain,
        position: Callable,
        jacobian: Optional[Callable] = None,
        hessian: Optional[Callable] = None,
        jet: Optional[Callable] = None,
        h_f: float = 1e-4,
        name: str = "",
    ):
        self.chart = chart
        self.domain = domain
        self._position = position
        self._jacobian = jacobian
        self._hessian = hessian
        self._jet = jet
        self.h_f = h_f
        self.name = name

    @property
    def n(self):
        return self.domain.n

    @property
    def derivative_mode(self):
        return "closed-form" if self._jacobian is not None else "finite-difference"

    def position(self, x):
        return self._position(np.asarray(x, dtype=float))

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self._jacobian is not None:
            return self._jacobian(x)
        if self._jet is not None:
            return self._jet(x)[1]
        return jacobian_fd(self._position, x, self.h_f)

    def jet(self, x):
        x = np.asarray(x, dtype=float)
        if self._jet is not None:
            return self._jet(x)
        return self.position(x), self.jacobian(x)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        if self._hessian is not None:
            return self._hessian(x)
        if self._jacobian is not None or self._jet is not None:
            return jacobian_fd(self.jacobian, x, self.h_f)
        return hessian_fd(self._position, x, 10.0 * self.h_f)


@dataclass(frozen=True)
class SurfaceData:
    """Pointwise first- and second-order data of an immersion at a batch of points."""

    x: np.ndarray
    position: np.ndarray
    J: np.ndarray
    G: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    detg: np.ndarray
    normal_projector: np.ndarray
    II: Optional[np.ndarray] = None
    H: Optional[np.ndarray] = None


def _metric_block(G, J):
    g = np.einsum("...ai,...ab,...bj->...ij", J, G, J)
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def _check_spacelike(g, x):
    w = np.linalg.eigvalsh(g)
    if np.any(w <= 0):
        bad = np.argwhere(np.min(w, axis=-1) <= 0)
        idx = tuple(bad[0]) if bad.size else ()
        node = np.asarray(x)[idx] if idx else x
        raise NotSpacelikeError(f"induced metric not positive definite at node {node}")
    return w


def first_order(imm: Immersion, x) -> SurfaceData:
    x = np.asarray(x, dtype=float)
    pos, J = imm.jet(x)
    G = imm.chart.metric(pos)
    g = _metric_block(G, J)
    _check_spacelike(g, x)
    ginv = np.linalg.inv(g)
    detg = np.linalg.det(g)
    # P v = v - J g^{-1} J^T G v
    tang = np.einsum("...ai,...ij,...bj,...bc->...ac", J, ginv, J, G)
    P = np.eye(G.shape[-1]) - tang
    return SurfaceData(x, pos, J, G, g, ginv, detg, P)


def surface_data(imm: Immersion, x) -> SurfaceData:
    """First-order data plus second fundamental form and mean curvature vector."""
    d = first_order(imm, x)
    Hf = imm.hessian(x)
    gam = christoffel(imm.chart, d.position)
    cov = Hf + np.einsum("...lmn,...mi,...nj->...lij", gam, d.J, d.J)
    II = np.einsum("...ab,...bij->...aij", d.normal_projector, cov)
    II = 0.5 * (II + np.swapaxes(II, -1, -2))
    H = np.einsum("...ij,...aij->...a", d.ginv, II)
    return SurfaceData(
        d.x, d.position, d.J, d.G, d.g, d.ginv, d.detg, d.normal_projector, II, H
    )


@dataclass(frozen=True)
class TangentFrame:
    coordinate: np.ndarray  # (..., D, n) raw tangents d_i f
    orthonormal: np.ndarray  # (..., D, n) e_1..e_n
    change: np.ndarray  # (..., n, n) with e_a = sum_i change[i, a] d_i f


def _orthonormalizer(g):
    """Upper-triangular C with C^T g C = I (Gram-Schmidt in coordinate order)."""
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    return np.swapaxes(Linv, -1, -2)


def tangent_frame(imm: Immersion, x) -> TangentFrame:
    d = first_order(imm, x)
    s = np.linalg.svd(d.g, compute_uv=False)
    if np.any(s[..., -1] <= 1e-12 * s[..., 0]):
        raise RankDeficiencyError("differential lost rank (non-immersion point)")
    C = _orthonormalizer(d.g)
    E = np.einsum("...ai,...ib->...ab", d.J, C)
    return TangentFrame(coordinate=d.J, orthonormal=E, change=C)


def induced_metric(imm: Immersion, x):
    """``(g, g^{-1}, det g)`` of the metric induced by the immersion."""
    d = first_order(imm, x)
    return d.g, d.ginv, d.detg


def normal_projector(imm: Immersion, x):
    return first_order(imm, x).normal_projector


def second_fundamental_form(imm: Immersion, x):
    """``II_ij = (d_i d_j f + Gamma(d_i f, d_j f))^perp`` as ambient vectors."""
    return surface_data(imm, x).II


def mean_curvature_vector(imm: Immersion, x):
    """``H = g^{ij} II_ij``, the trace over an orthonormal tangent frame."""
    return surface_data(imm, x).H


def volume(imm: Immersion, grid: QuadratureGrid) -> float:
    """Tensor Gauss-Legendre quadrature of ``sqrt(det g)`` over the parameter box."""
    d = first_order(imm, grid.nodes)
    return grid.integrate(np.sqrt(d.detg))


def scalar_curvature(imm: Immersion, x):
    """Intrinsic scalar curvature through the Gauss equation.

    ``Scal = sum_ij R(e_i, e_j, e_j, e_i) + <H, H> - sum_ij |II(e_i, e_j)|^2``.
    """
    from .ambient import riemann

    d = surface_data(imm, x)
    C = _orthonormalizer(d.g)
    E = np.einsum("...ai,...ib->...ab", d.J, C)
    R = riemann(imm.chart, d.position).riemann
    amb = np.einsum("...abcd,...ai,...bj,...cj,...di->...", R, E, E, E, E)
    IIe = np.einsum("...aij,...ik,...jl->...akl", d.II, C, C)
    HH = inner(d.G, d.H, d.H)
    sq = np.einsum("...akl,...ab,...bkl->...", IIe, d.G, IIe)
    return amb + HH - sq

"""Null normal frames, null expansions, shape operators and the light-cone dual map."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ._numerics import QuadratureGrid, inner, jacobian_fd
from .ambient import christoffel
from .errors import FrameError, NotMarginallyTrappedError, RankDeficiencyError
from .immersion import Immersion, first_order, surface_data

SIGNS = {"+": 0, "-": 1, 1: 0, -1: 1, "plus": 0, "minus": 1}


class NullNormalFrame:
    """A pair of null normal fields with ``<l+, l-> = -2``.

    ``plus`` and ``minus`` map parameter points ``(..., n)`` to ambient
    vectors ``(..., D)``. Their parameter derivatives come from the optional
    closed forms or from central differences.
    """

    def __init__(
        self,
        plus: Callable,
        minus: Callable,
        provenance: str = "prescribed-by-example",
        plus_jacobian: Optional[Callable] = None,
        minus_jacobian: Optional[Callable] = None,
        gauge_lambda: Optional[Callable] = None,
        h: float = 1e-4,
    ):
        self._plus = plus
        self._minus = minus
        self.provenance = provenance
        self._plus_jacobian = plus_jacobian
        self._minus_jacobian = minus_jacobian
        self.gauge_lambda = gauge_lambda
        self.h = h

    def plus(self, x):
        return self._plus(np.asarray(x, dtype=float))

    def minus(self, x):
        return self._minus(np.asarray(x, dtype=float))

    def field(self, sign):
        return self.plus if SIGNS[sign] == 0 else self.minus

    def plus_jacobian(self, x):
        if self._plus_jacobian is not None:
            return self._plus_jacobian(np.asarray(x, dtype=float))
        return jacobian_fd(self._plus, x, self.h)

    def minus_jacobian(self, x):
        if self._minus_jacobian is not None:
            return self._minus_jacobian(np.asarray(x, dtype=float))
        return jacobian_fd(self._minus, x, self.h)

    def jacobian(self, sign, x):
        return self.plus_jacobian(x) if SIGNS[sign] == 0 else self.minus_jacobian(x)

    def rescaled(self, lam: Union[float, Callable]):
        """Gauge action ``l+ -> e^lam l+``, ``l- -> e^-lam l-``."""
        lam_fn = lam if callable(lam) else (lambda x, c=float(lam): np.full(np.shape(x)[:-1], c))
        old = self.gauge_lambda

        def total(x):
            base = old(x) if old is not None else 0.0
            return base + lam_fn(x)

        return NullNormalFrame(
            lambda x: np.exp(lam_fn(x))[..., None] * self._plus(x),
            lambda x: np.exp(-lam_fn(x))[..., None] * self._minus(x),
            provenance=self.provenance,
            gauge_lambda=total,
            h=self.h,
        )

    def swapped(self):
        """Exchange the roles of the two null directions."""
        return NullNormalFrame(
            self._minus,
            self._plus,
            provenance=self.provenance,
            plus_jacobian=self._minus_jacobian,
            minus_jacobian=self._plus_jacobian,
            h=self.h,
        )


@dataclass(frozen=True)
class FrameSample:
    plus: np.ndarray
    minus: np.ndarray


def _default_seed(P, G, T):
    # per node: the coordinate axis whose normal part orthogonal to T is largest
    D = G.shape[-1]
    best = None
    best_norm = None
    for k in range(D):
        e = np.zeros(D)
        e[k] = 1.0
        v = np.einsum("...ab,b->...a", P, e)
        v = v + inner(G, v, T)[..., None] * T
        nv = inner(G, v, v)
        if best is None:
            best, best_norm = v, nv
        else:
            take = nv > best_norm
            best = np.where(take[..., None], v, best)
            best_norm = np.where(take, nv, best_norm)
    return best


def build_null_frame(
    imm: Immersion,
    x,
    seed_orientation=None,
    align_with_mean_curvature: bool = False,
    null_tol: float = 1e-8,
) -> FrameSample:
    """Null normals ``l+ = T + N``, ``l- = T - N`` from the normal plane.

    ``T`` is the future unit normal obtained by projecting the chart's time
    vector; ``N`` is the unit space-like normal orthogonal to ``T`` with
    positive pairing against ``seed_orientation`` (a constant vector or a
    callable of the parameter point). With ``align_with_mean_curvature`` the
    sign of ``N`` is chosen so that ``<l+, H> = 0``, which requires a null
    mean curvature vector.
    """
    x = np.asarray(x, dtype=float)
    d = surface_data(imm, x) if align_with_mean_curvature else first_order(imm, x)
    G, P = d.G, d.normal_projector
    tvec = np.broadcast_to(imm.chart.time_vector(), d.position.shape)
    Tp = np.einsum("...ab,...b->...a", P, tvec)
    tt = inner(G, Tp, Tp)
    if np.any(tt >= 0):
        raise FrameError("normal plane is not Lorentzian (immersion not space-like of codim 2)")
    T = Tp / np.sqrt(-tt)[..., None]

    if seed_orientation is None:
        N = _default_seed(P, G, T)
    else:
        seed = seed_orientation(x) if callable(seed_orientation) else seed_orientation
        seed = np.broadcast_to(np.asarray(seed, dtype=float), d.position.shape)
        N = np.einsum("...ab,...b->...a", P, seed)
        N = N + inner(G, N, T)[..., None] * T
    nn = inner(G, N, N)
    if np.any(nn <= 1e-14):
        raise FrameError("seed orientation has no space-like normal component")
    N = N / np.sqrt(nn)[..., None]

    if align_with_mean_curvature:
        H = d.H
        HH = inner(G, H, H)
        scale = 1.0 + np.einsum("...a,...a->...", H, H)
        if np.any(np.abs(HH) > null_tol * scale):
            raise NotMarginallyTrappedError(
                f"mean curvature vector not null (max |<H,H>| = {np.max(np.abs(HH)):.3e})"
            )
        a_plus = np.abs(inner(G, T + N, H))
        a_minus = np.abs(inner(G, T - N, H))
        flip = a_minus < a_plus
        N = np.where(flip[..., None], -N, N)
    return FrameSample(plus=T + N, minus=T - N)


def null_frame_field(imm: Immersion, seed_orientation=None, align_with_mean_curvature=False):
    """A :class:`NullNormalFrame` whose fields are built pointwise by :func:`build_null_frame`."""

    def plus(x):
        return build_null_frame(imm, x, seed_orientation, align_with_mean_curvature).plus

    def minus(x):
        return build_null_frame(imm, x, seed_orientation, align_with_mean_curvature).minus

    return NullNormalFrame(plus, minus, provenance="constructed-from-normal-space")


def frame_residuals(imm: Immersion, frame: NullNormalFrame, x):
    """Max absolute residuals of the normalization and normality conditions."""
    d = first_order(imm, x)
    lp, lm = frame.plus(x), frame.minus(x)
    G = d.G
    return {
        "plus_null": float(np.max(np.abs(inner(G, lp, lp)))),
        "minus_null": float(np.max(np.abs(inner(G, lm, lm)))),
        "pairing": float(np.max(np.abs(inner(G, lp, lm) + 2.0))),
        "plus_normal": float(np.max(np.abs(np.einsum("...a,...ab,...bi->...i", lp, G, d.J)))),
        "minus_normal": float(np.max(np.abs(np.einsum("...a,...ab,...bi->...i", lm, G, d.J)))),
    }


def theta(imm: Immersion, frame: NullNormalFrame, x, sign="+", check=True, tol=1e-8):
    """Null expansion ``<H, l+->``.

    With ``check`` the decomposition ``H = -(theta- l+ + theta+ l-)/2`` is
    verified at every point.
    """
    d = surface_data(imm, x)
    lp, lm = frame.plus(x), frame.minus(x)
    tp = inner(d.G, d.H, lp)
    tm = inner(d.G, d.H, lm)
    if check:
        rebuilt = -0.5 * (tm[..., None] * lp + tp[..., None] * lm)
        res = np.max(np.abs(rebuilt - d.H))
        if res > tol * (1.0 + np.max(np.abs(d.H))):
            raise FrameError(f"H does not decompose along the null frame (residual {res:.3e})")
    return tp if SIGNS[sign] == 0 else tm


def shape_operator(imm: Immersion, frame: NullNormalFrame, x, sign="+", route="second_fundamental_form"):
    """Coordinate matrix ``A[k, i]`` with ``A d_i = A[k, i] d_k``.

    The default route pairs the second fundamental form with ``l``; the
    ``"connection"`` route differentiates the frame field instead,
    ``<A d_i, d_j> = -<D_{d_i} l, d_j f>``, and serves as a cross-check.
    """
    if route == "second_fundamental_form":
        d = surface_data(imm, x)
        ell = frame.field(sign)(x)
        B = np.einsum("...aij,...ab,...b->...ij", d.II, d.G, ell)
    elif route == "connection":
        d = first_order(imm, x)
        ell = frame.field(sign)(x)
        dell = frame.jacobian(sign, x)
        gam = christoffel(imm.chart, d.position)
        cov = dell + np.einsum("...lmn,...mi,...n->...li", gam, d.J, ell)
        B = -np.einsum("...ai,...ab,...bj->...ij", cov, d.G, d.J)
    else:
        raise ValueError(f"unknown route {route!r}")
    return np.einsum("...kj,...ij->...ki", d.ginv, B)


def self_adjointness_residual(imm: Immersion, A, x):
    """``max |g A - (g A)^T|``; a self-adjoint shape operator has real spectrum."""
    g = first_order(imm, x).g
    gA = np.einsum("...kj,...ji->...ki", g, A)
    return float(np.max(np.abs(gA - np.swapaxes(gA, -1, -2))))


@dataclass(frozen=True)
class MarginallyTrappedReport:
    max_theta_plus: float
    max_trace_A_plus: float
    tol: float

    @property
    def passed(self):
        return self.max_theta_plus <= self.tol


def marginally_trapped_check(imm, frame, grid: QuadratureGrid, tol=1e-6) -> MarginallyTrappedReport:
    x = grid.nodes
    tp = theta(imm, frame, x, "+", check=False)
    A = shape_operator(imm, frame, x, "+")
    return MarginallyTrappedReport(
        max_theta_plus=float(np.max(np.abs(tp))),
        max_trace_A_plus=float(np.max(np.abs(np.trace(A, axis1=-2, axis2=-1)))),
        tol=tol,
    )


def dual_map(p: Immersion, x, cone_tol=1e-10):
    """The light-like ``q`` with ``<p, q> = 1`` and ``<d_i p, q> = 0``.

    The ``n + 1`` linear conditions fix ``q`` up to adding multiples of
    ``p`` (itself null and normal); ``q = q0 + s p`` with
    ``s = -<q0, q0>/2`` then makes ``q`` null.
    """
    x = np.asarray(x, dtype=float)
    pos, J = p.jet(x)
    G = p.chart.metric(pos)
    pp = inner(G, pos, pos)
    scale = 1.0 + np.einsum("...a,...a->...", pos, pos)
    if np.any(np.abs(pp) > cone_tol * scale):
        raise ValueError("immersion does not lie on the light cone")
    rows = np.concatenate([pos[..., None, :], np.swapaxes(J, -1, -2)], axis=-2)
    M = np.einsum("...ka,...ab->...kb", rows, G)
    rhs = np.zeros(M.shape[:-1])
    rhs[..., 0] = 1.0
    MMt = np.einsum("...ka,...la->...kl", M, M)
    s = np.linalg.svd(MMt, compute_uv=False)
    if np.any(s[..., -1] <= 1e-13 * s[..., 0]):
        raise RankDeficiencyError("dual map: linear system singular (non-immersed point)")
    y = np.linalg.solve(MMt, rhs[..., None])[..., 0]
    q0 = np.einsum("...ka,...k->...a", M, y)
    shift = -0.5 * inner(G, q0, q0)
    return q0 + shift[..., None] * pos

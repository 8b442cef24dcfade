"""Finite-difference and quadrature helpers shared by every module.

All callables handled here are vectorized over leading axes: a function
``func(x)`` with ``x`` of shape ``(..., n)`` returns ``(..., *out)``.
Shifted evaluation points are stacked along a new leading axis so each
difference stencil costs a single call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

EPS = np.finfo(float).eps


def richardson(coarse, fine, order=2):
    """Combine estimates at step h and h/2 whose leading error is O(h**order)."""
    factor = 2.0**order
    return (factor * fine - coarse) / (factor - 1.0)


def _central_first(func, x, h):
    n = x.shape[-1]
    shifts = (np.eye(n) * h).reshape((n,) + (1,) * (x.ndim - 1) + (n,))
    pts = np.concatenate([x[None] + shifts, x[None] - shifts])
    vals = func(pts)
    fwd, bwd = vals[:n], vals[n:]
    d = (fwd - bwd) / (2.0 * h)
    # (n, ..., *out) -> (..., *out, n)
    return np.moveaxis(d, 0, -1)


def jacobian_fd(func: Callable, x, h: float = 1e-4, richardson_level: bool = True):
    """Central-difference Jacobian; derivative index is the last axis."""
    x = np.asarray(x, dtype=float)
    coarse = _central_first(func, x, h)
    if not richardson_level:
        return coarse
    return richardson(coarse, _central_first(func, x, h / 2.0))


def _central_second(func, x, h):
    n = x.shape[-1]
    base = x.shape
    offsets = [np.zeros(n)]
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        offsets += [e, -e]
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            offsets += [ei + ej, ei - ej, -ei + ej, -ei - ej]
            pairs.append((i, j))
    offsets = np.array(offsets)
    pts = x[None] + offsets.reshape((len(offsets),) + (1,) * (len(base) - 1) + (n,))
    vals = func(pts)
    f0 = vals[0]
    out = np.empty(f0.shape + (n, n))
    for i in range(n):
        out[..., i, i] = (vals[1 + 2 * i] - 2.0 * f0 + vals[2 + 2 * i]) / h**2
    k = 1 + 2 * n
    for i, j in pairs:
        pp, pm, mp, mm = vals[k], vals[k + 1], vals[k + 2], vals[k + 3]
        out[..., i, j] = out[..., j, i] = (pp - pm - mp + mm) / (4.0 * h**2)
        k += 4
    return out


def hessian_fd(func: Callable, x, h: float = 1e-3, richardson_level: bool = True):
    """Second-difference Hessian; the two derivative indices are the last axes."""
    x = np.asarray(x, dtype=float)
    coarse = _central_second(func, x, h)
    if not richardson_level:
        return coarse
    return richardson(coarse, _central_second(func, x, h / 2.0))


def scalar_derivative(func: Callable, t0: float, h: float, order: int = 1):
    """Richardson-extrapolated central difference of a function of one real variable."""

    def stencil(step):
        if order == 1:
            return (func(t0 + step) - func(t0 - step)) / (2.0 * step)
        if order == 2:
            return (func(t0 + step) - 2.0 * func(t0) + func(t0 - step)) / step**2
        raise ValueError("order must be 1 or 2")

    return richardson(stencil(h), stencil(h / 2.0))


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product Gauss-Legendre rule over an axis-aligned box."""

    nodes: np.ndarray
    weights: np.ndarray
    order: tuple

    @classmethod
    def gauss_legendre(cls, box, order=24):
        box = np.asarray(box, dtype=float)
        n = box.shape[0]
        orders = (order,) * n if np.isscalar(order) else tuple(order)
        axes_x, axes_w = [], []
        for (lo, hi), m in zip(box, orders):
            s, w = np.polynomial.legendre.leggauss(m)
            axes_x.append(0.5 * (hi - lo) * s + 0.5 * (hi + lo))
            axes_w.append(0.5 * (hi - lo) * w)
        mesh = np.meshgrid(*axes_x, indexing="ij")
        wmesh = np.meshgrid(*axes_w, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        weights = np.prod(np.stack([w.ravel() for w in wmesh], axis=-1), axis=-1)
        return cls(nodes=nodes, weights=weights, order=orders)

    def refined(self, box, factor=2):
        return QuadratureGrid.gauss_legendre(box, tuple(factor * m for m in self.order))

    def integrate(self, values):
        """Weighted sum in fixed node order so repeated runs are bit-identical."""
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))


def inner(G, a, b):
    """Metric pairing <a, b> with metric components G, all batched."""
    return np.einsum("...i,...ij,...j->...", a, G, b)

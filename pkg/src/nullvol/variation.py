"""Variations of an immersion, their volume curves, and the variation formulas.

A variation is realized as ``F(t, x) = exp_{f(x)}(V(t, x))`` with

* characteristic: ``V = tau(t, x) l+(x)``; the t-lines are pregeodesics, so
  ``X = tau_t(0, x) l+`` and ``X' = tau_tt(0, x) l+``;
* admissible: ``V = t phi l+ + t^2/2 D``; ``X = phi l+`` and ``X' = D``;
* general: ``V = t X + t^2/2 D``; ``X' = D``.

``X' = D`` holds because the exponential map is the identity to second order
in normal coordinates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from ._numerics import EPS, QuadratureGrid, inner, jacobian_fd, richardson, scalar_derivative
from .ambient import DEFAULT_STEPS_PER_UNIT, christoffel, geodesic_flow, riemann, steps_for
from .errors import FormulaMismatchError, NotCharacteristicError
from .immersion import Immersion, ParamDomain, first_order, surface_data, volume
from .nullframe import NullNormalFrame, shape_operator

H_TAU = 1e-3  # t-step for derivatives of profiles at t = 0
H_X = 1e-4  # parameter step for surface derivatives of fields


def bump(domain: ParamDomain) -> Callable:
    """``prod_k (1 - s_k^2)^3`` in collar coordinates, zero on the collar."""

    def f(x):
        s = domain.collar_coordinates(x)
        core = np.clip(1.0 - s * s, 0.0, None) ** 3
        return np.prod(core, axis=-1)

    return f


@dataclass(frozen=True)
class VariationSpec:
    kind: str
    tau: Optional[Callable] = None
    phi: Optional[Callable] = None
    field: Optional[Callable] = None
    accel: Optional[Callable] = None
    t_range: tuple = (-1.0, 1.0)
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("characteristic", "admissible", "general"):
            raise ValueError(f"unknown variation kind {self.kind!r}")
        if self.kind == "characteristic" and self.tau is None:
            raise ValueError("characteristic variation needs tau")
        if self.kind == "admissible" and self.phi is None:
            raise ValueError("admissible variation needs phi")
        if self.kind == "general" and self.field is None:
            raise ValueError("general variation needs a field")

    @property
    def half_width(self):
        return 0.5 * (self.t_range[1] - self.t_range[0])

    def initial_velocity(self, frame: NullNormalFrame, t, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "characteristic":
            return self.tau(t, x)[..., None] * frame.plus(x)
        if self.kind == "admissible":
            V = (t * self.phi(x))[..., None] * frame.plus(x)
        else:
            V = t * self.field(x)
        if self.accel is not None:
            V = V + 0.5 * t * t * self.accel(x)
        return V

    def phi_values(self, x, h=H_TAU):
        if self.kind == "characteristic":
            return scalar_derivative(lambda t: self.tau(t, x), 0.0, h, order=1)
        if self.kind == "admissible":
            return self.phi(x)
        return None

    def psi_values(self, x, h=H_TAU):
        if self.kind == "characteristic":
            return scalar_derivative(lambda t: self.tau(t, x), 0.0, h, order=2)
        return None

    def variational_field(self, frame: NullNormalFrame, x, h=H_TAU):
        """``X = dF/dt`` at ``t = 0`` as ambient vectors."""
        x = np.asarray(x, dtype=float)
        if self.kind == "general":
            return self.field(x)
        return self.phi_values(x, h)[..., None] * frame.plus(x)

    def acceleration_field(self, frame: NullNormalFrame, x, h=H_TAU):
        """``X' = D_t dF/dt`` at ``t = 0``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "characteristic":
            return self.psi_values(x, h)[..., None] * frame.plus(x)
        if self.accel is None:
            return np.zeros(x.shape[:-1] + (frame.plus(x).shape[-1],))
        return self.accel(x)

    def scaled(self, c):
        """The variation with every profile multiplied by ``c``."""
        c = float(c)
        mul = lambda g: None if g is None else (lambda *a: c * g(*a))  # noqa: E731
        return replace(
            self, tau=mul(self.tau), phi=mul(self.phi), field=mul(self.field), accel=mul(self.accel)
        )


def characteristic(tau, t_range=(-1.0, 1.0), label="") -> VariationSpec:
    return VariationSpec("characteristic", tau=tau, t_range=t_range, label=label)


def admissible(phi, accel=None, t_range=(-1.0, 1.0), label="") -> VariationSpec:
    return VariationSpec("admissible", phi=phi, accel=accel, t_range=t_range, label=label)


def general(field, accel=None, t_range=(-1.0, 1.0), label="") -> VariationSpec:
    return VariationSpec("general", field=field, accel=accel, t_range=t_range, label=label)


def zero_spec(t_range=(-1.0, 1.0)) -> VariationSpec:
    return characteristic(lambda t, x: np.zeros(np.shape(x)[:-1]), t_range, label="zero")


# ------------------------------------------------------------ random profiles


def _monomials(domain: ParamDomain, degree):
    """Exponent rows of the non-constant monomials of total degree <= ``degree``."""
    exps = [e for e in np.ndindex(*(degree + 1,) * domain.n) if 0 < sum(e) <= degree]
    return np.array(exps, dtype=int).reshape(-1, domain.n)


def polynomial_profile(domain: ParamDomain, const, coeffs, degree=2):
    """``bump(x) * (const + sum_k coeffs[k] s^e_k)`` in collar coordinates.

    ``const`` of shape ``(m,)`` and ``coeffs`` of shape ``(K, m)`` give an
    ``m``-vector valued profile; scalars give a scalar one.
    """
    b = bump(domain)
    E = _monomials(domain, degree)
    const = np.asarray(const, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)

    def f(x):
        s = domain.collar_coordinates(x)
        powers = [np.ones_like(s), s]
        for _ in range(degree - 1):
            powers.append(powers[-1] * s)
        P = np.stack(powers, axis=-1)  # (..., n, degree + 1)
        mon = np.prod(P[..., np.arange(domain.n), E], axis=-1)
        poly = const + np.tensordot(mon, coeffs, axes=(-1, 0))
        w = b(x)
        return w[..., None] * poly if poly.ndim > w.ndim else w * poly

    return f


def random_profile(domain: ParamDomain, rng: np.random.Generator, degree=2, base=(0.5, 1.0)):
    """``bump(x) * P(s)`` with ``P`` a random polynomial of the collar coordinates.

    The constant coefficient is drawn from ``base`` so the profile is never
    identically zero.
    """
    K = len(_monomials(domain, degree))
    c0 = rng.uniform(*base) * rng.choice([-1.0, 1.0])
    coeffs = rng.uniform(-0.5, 0.5, size=K)
    return polynomial_profile(domain, c0, coeffs, degree)


def random_vector_profile(domain: ParamDomain, rng: np.random.Generator, dim, scale=0.3):
    K = len(_monomials(domain, 2))
    weights = rng.uniform(-scale, scale, size=dim)
    const = weights * rng.uniform(0.5, 1.0, size=dim) * rng.choice([-1.0, 1.0], size=dim)
    return polynomial_profile(domain, const, weights * rng.uniform(-0.5, 0.5, size=(K, dim)))


def random_characteristic(domain: ParamDomain, rng: np.random.Generator, t_range=(-1.0, 1.0)):
    """``tau(t, x) = t phi(x) + t^2/2 psi(x)`` with random bump profiles."""
    phi = random_profile(domain, rng)
    psi = random_profile(domain, rng)
    return characteristic(lambda t, x: t * phi(x) + 0.5 * t * t * psi(x), t_range, label="random")


def random_admissible(domain: ParamDomain, rng: np.random.Generator, dim, t_range=(-1.0, 1.0)):
    """Admissible variation ``t phi l+ + t^2/2 D`` with an arbitrary bump-supported ``D``."""
    phi = random_profile(domain, rng)
    D = random_vector_profile(domain, rng, dim)
    return admissible(phi, D, t_range, label="random-admissible")


# ------------------------------------------------------------------- deform


def deform(imm: Immersion, spec: VariationSpec, frame: NullNormalFrame, t, steps_per_unit=DEFAULT_STEPS_PER_UNIT):
    """The immersion ``x -> F(t, x) = exp_{f(x)}(V(t, x))``.

    Tangent vectors of the deformed map come from the Jacobi equation with
    initial data ``(d_i f, d_i V)``, so no differencing of geodesic
    endpoints is involved.
    """
    chart = imm.chart

    def velocity(y):
        return spec.initial_velocity(frame, t, y)

    def jet(x):
        x = np.asarray(x, dtype=float)
        p, J = imm.jet(x)
        V = velocity(x)
        dV = jacobian_fd(velocity, x, H_X)
        length = float(np.max(np.linalg.norm(V, axis=-1))) if V.size else 0.0
        x1, _, dx1, _ = geodesic_flow(chart, p, V, steps_for(length, steps_per_unit), J, dV)
        return x1, dx1

    return Immersion(chart, imm.domain, lambda x: jet(x)[0], jet=jet, name=f"{imm.name}@t={t:g}")


def vol_curve(imm, spec, frame, grid: QuadratureGrid, t_samples):
    """``[(t, Vol(t)), ...]`` at the requested samples, in order."""
    return [(float(t), volume(deform(imm, spec, frame, t), grid)) for t in t_samples]


# --------------------------------------------------------- finite differences


@dataclass(frozen=True)
class FDEstimate:
    """A Richardson-extrapolated difference quotient of ``Vol(t)`` at 0.

    ``coarse`` and ``fine`` are the plain quotients at steps ``h`` and
    ``h/2``; ``noise_floor`` bounds the error of ``value``: it adds the
    rounding amplification of the stencil to the gap between the two plain
    quotients, which exceeds the extrapolated truncation error.
    """

    value: float
    coarse: float
    fine: float
    step: float
    noise_floor: float


def _fd_volume(imm, spec, frame, grid, h, order):
    h = float(h) if h is not None else 1e-2 * spec.half_width
    cache = {}

    def vol(t):
        if t not in cache:
            cache[t] = volume(deform(imm, spec, frame, t), grid)
        return cache[t]

    def quotient(step):
        if order == 1:
            return (vol(step) - vol(-step)) / (2.0 * step)
        return (vol(step) - 2.0 * vol(0.0) + vol(-step)) / step**2

    coarse, fine = quotient(h), quotient(h / 2.0)
    value = richardson(coarse, fine)
    rounding = 64.0 * EPS * max(1.0, abs(vol(0.0))) / (0.5 * h) ** order
    floor = rounding + abs(coarse - fine)
    return FDEstimate(value, coarse, fine, h, floor)


def first_variation_fd(imm, spec, frame, grid, h=None) -> FDEstimate:
    return _fd_volume(imm, spec, frame, grid, h, 1)


def second_variation_fd(imm, spec, frame, grid, h=None) -> FDEstimate:
    est = _fd_volume(imm, spec, frame, grid, h, 2)
    rounding = est.noise_floor - abs(est.coarse - est.fine)
    if abs(est.value) < 1e2 * rounding:
        warnings.warn(
            f"second variation {est.value:.3e} is within 100x the rounding floor {rounding:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return est


# ------------------------------------------------------------ formulas


def first_variation_formula(imm, spec, frame, grid: QuadratureGrid) -> float:
    """``-int <X, H> dV_0``."""
    x = grid.nodes
    d = surface_data(imm, x)
    X = spec.variational_field(frame, x)
    return -grid.integrate(inner(d.G, X, d.H) * np.sqrt(d.detg))


@dataclass(frozen=True)
class SecondVariationTerms:
    """Integrated terms of the general second-variation formula.

    ``curvature = -int sum_i R(X, e_i, e_i, X)``,
    ``normal_gradient = int sum_i |(D_{e_i} X)^perp|^2``,
    ``shape_cross = -int sum_ij <D_{e_i} X, e_j><D_{e_j} X, e_i>``,
    ``trace_squared = int (sum_i <D_{e_i} X, e_i>)^2``,
    ``acceleration = -int <X', H>``.
    """

    curvature: float
    normal_gradient: float
    shape_cross: float
    trace_squared: float
    acceleration: float

    @property
    def total(self):
        return (
            self.curvature
            + self.normal_gradient
            + self.shape_cross
            + self.trace_squared
            + self.acceleration
        )

    def as_dict(self):
        return {
            "curvature": self.curvature,
            "normal_gradient": self.normal_gradient,
            "shape_cross": self.shape_cross,
            "trace_squared": self.trace_squared,
            "acceleration": self.acceleration,
            "total": self.total,
        }


def covariant_surface_derivative(imm: Immersion, field: Callable, x, h=H_X):
    """``D_{d_i} X`` for an ambient field along the immersion, shape ``(..., D, n)``.

    Parameter derivatives of the components are central differences
    (one Richardson level); the Christoffel term corrects them to the
    ambient Levi-Civita connection.
    """
    x = np.asarray(x, dtype=float)
    pos, J = imm.jet(x)
    X = field(x)
    dX = jacobian_fd(field, x, h)
    gam = christoffel(imm.chart, pos)
    return dX + np.einsum("...lmn,...mi,...n->...li", gam, J, X)


def second_variation_general_formula(imm, spec, frame, grid: QuadratureGrid, h=H_X) -> SecondVariationTerms:
    x = grid.nodes
    d = surface_data(imm, x)
    w = np.sqrt(d.detg)
    L = np.linalg.cholesky(d.g)
    C = np.swapaxes(np.linalg.inv(L), -1, -2)
    E = np.einsum("...ai,...ik->...ak", d.J, C)

    X = spec.variational_field(frame, x)
    Xp = spec.acceleration_field(frame, x)
    cov = covariant_surface_derivative(imm, lambda y: spec.variational_field(frame, y), x, h)
    cov_e = np.einsum("...ai,...ik->...ak", cov, C)

    R = riemann(imm.chart, d.position).riemann
    curv = -np.einsum("...abcd,...a,...bk,...ck,...d->...", R, X, E, E, X)
    perp = np.einsum("...ab,...bk->...ak", d.normal_projector, cov_e)
    normal = np.einsum("...ak,...ab,...bk->...", perp, d.G, perp)
    M = np.einsum("...ak,...ab,...bl->...kl", cov_e, d.G, E)
    cross = -np.einsum("...kl,...lk->...", M, M)
    trsq = np.trace(M, axis1=-2, axis2=-1) ** 2
    acc = -inner(d.G, Xp, d.H)
    return SecondVariationTerms(
        curvature=grid.integrate(curv * w),
        normal_gradient=grid.integrate(normal * w),
        shape_cross=grid.integrate(cross * w),
        trace_squared=grid.integrate(trsq * w),
        acceleration=grid.integrate(acc * w),
    )


def close(a, b, rtol, atol=1e-12):
    return abs(a - b) <= rtol * max(abs(a), abs(b)) + atol


def characteristic_integrand(imm, frame, x):
    """Pointwise ``tr(A+^2) + Ric(l+, l+)``."""
    A = shape_operator(imm, frame, x, "+")
    trA2 = np.einsum("...ki,...ik->...", A, A)
    pos = imm.position(x)
    ric = riemann(imm.chart, pos).ricci
    lp = frame.plus(x)
    return trA2 + np.einsum("...a,...ab,...b->...", lp, ric, lp)


def second_variation_characteristic_formula(
    imm, spec, frame, grid: QuadratureGrid, check=True, rtol=1e-6
) -> float:
    """``-int phi^2 (tr(A+^2) + Ric(l+, l+)) dV_0`` for a characteristic variation.

    With ``check`` the value is compared against the general formula and a
    :class:`FormulaMismatchError` is raised beyond ``rtol``.
    """
    if spec.kind != "characteristic":
        raise NotCharacteristicError(f"expected a characteristic variation, got {spec.kind!r}")
    x = grid.nodes
    d = first_order(imm, x)
    phi = spec.phi_values(x)
    value = -grid.integrate(phi**2 * characteristic_integrand(imm, frame, x) * np.sqrt(d.detg))
    if check:
        general_value = second_variation_general_formula(imm, spec, frame, grid).total
        if not close(value, general_value, rtol):
            raise FormulaMismatchError(
                f"characteristic formula {value:.12e} vs general formula {general_value:.12e}"
            )
    return value

"""Fundamental solutions, the parametrix pair and the Nystrom kernels.

Conventions used throughout:

* ``x`` is the field (collocation) point, ``y`` the integration point.
* ``Phi(x, y)`` is the free-space kernel of ``-Laplace``:
  ``(1/2pi) ln(1/|x-y|)`` in 2D and ``1/(4pi |x-y|)`` in 3D.
* ``nu`` is the unit outward normal at ``y``; ``d/dnu(y) Phi(x,y) =
  (x-y).nu / (2pi |x-y|^2)`` in 2D (``4pi |x-y|^3`` in 3D).
* For the operator ``-div(sigma grad .)`` the parametrix pair is
  ``P = Phi / sigma(y)`` and ``R = -grad_x Phi . grad sigma(x) / sigma(y)``,
  the remainder being only weakly singular.

The four parameterized kernels feed the collocation systems: K11/K21 act
on the volume density over the rectangle coordinates ``(xi, tau)``, K12/K22
act on the boundary density.  K11 is the only one that needs a singularity
split (a cotangent part handled by dedicated trigonometric weights plus a
continuous remainder).

All functions broadcast over their array arguments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import StarDomain2D, _wrap_angle

__all__ = [
    "ConductivityField",
    "constant_conductivity",
    "LeviPairValue",
    "fundamental_solution",
    "grad_fundamental",
    "fundamental_normal_derivative",
    "levi_pair",
    "kernel_K11",
    "kernel_K11_split",
    "kernel_K12",
    "kernel_K21",
    "kernel_K22",
    "dipole_normal_factor",
]


@dataclass(frozen=True)
class ConductivityField:
    """Scalar conductivity with its analytic gradient.

    ``sigma`` maps ``(..., d)`` points to ``(...)`` values, ``grad_sigma``
    to ``(..., d)`` gradients.  Values must stay uniformly positive.
    """

    sigma: Callable[[np.ndarray], np.ndarray]
    grad_sigma: Callable[[np.ndarray], np.ndarray]

    def grad_log_sigma(self, x):
        """``grad(ln sigma) = grad(sigma) / sigma``."""
        x = np.asarray(x, dtype=float)
        return self.grad_sigma(x) / self.sigma(x)[..., None]


def constant_conductivity(value=1.0, dim=2):
    c = float(value)
    if c <= 0.0:
        raise ValueError("conductivity must be positive")
    return ConductivityField(
        sigma=lambda x: np.full(np.asarray(x).shape[:-1], c),
        grad_sigma=lambda x: np.zeros(np.asarray(x).shape[:-1] + (dim,)),
    )


@dataclass(frozen=True)
class LeviPairValue:
    P: float
    R: float


def _diff_and_dist(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = x - y
    dist = np.linalg.norm(diff, axis=-1)
    if np.any(dist == 0.0):
        raise ValueError("kernel evaluated at coincident points")
    return diff, dist


def fundamental_solution(d, x, y):
    """Free-space kernel of ``-Laplace`` in dimension ``d`` (2 or 3)."""
    _, dist = _diff_and_dist(x, y)
    if d == 2:
        return -np.log(dist) / (2.0 * np.pi)
    if d == 3:
        return 1.0 / (4.0 * np.pi * dist)
    raise ValueError(f"unsupported dimension {d}")


def grad_fundamental(d, x, y):
    """Gradient of the fundamental solution in the field point ``x``."""
    diff, dist = _diff_and_dist(x, y)
    if d == 2:
        return -diff / (2.0 * np.pi * dist[..., None] ** 2)
    if d == 3:
        return -diff / (4.0 * np.pi * dist[..., None] ** 3)
    raise ValueError(f"unsupported dimension {d}")


def fundamental_normal_derivative(d, x, y, nu):
    """``d/dnu(y) Phi(x, y)`` for unit normal ``nu`` at ``y``."""
    diff, dist = _diff_and_dist(x, y)
    dot = np.sum(diff * np.asarray(nu, dtype=float), axis=-1)
    if d == 2:
        return dot / (2.0 * np.pi * dist**2)
    if d == 3:
        return dot / (4.0 * np.pi * dist**3)
    raise ValueError(f"unsupported dimension {d}")


def levi_pair(sigma: ConductivityField, d, x, y):
    """Parametrix pair ``(P, R)`` at ``(x, y)``, ``x != y``.

    ``P = Phi(x,y)/sigma(y)`` and ``R = -grad_x Phi . grad sigma(x) / sigma(y)``;
    ``R`` carries a ``|x-y|^-(d-1)`` weak singularity.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sy = sigma.sigma(y)
    P = fundamental_solution(d, x, y) / sy
    R = -np.sum(grad_fundamental(d, x, y) * sigma.grad_sigma(x), axis=-1) / sy
    return LeviPairValue(P=P, R=R)


def dipole_normal_factor(w, nu, a, d):
    """``d/dnu(y) [ (y-x).a / |y-x|^d ]`` expressed through ``w = y - x``.

    This is the analytic closed form shared by the K12-type kernels in 2D
    (``d=2``) and 3D (``d=3``); no numerical differentiation is involved.
    """
    w = np.asarray(w, dtype=float)
    nu = np.asarray(nu, dtype=float)
    a = np.asarray(a, dtype=float)
    r2 = np.sum(w * w, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("dipole factor evaluated at coincident points")
    rd = r2 ** (d / 2.0)
    wa = np.sum(w * a, axis=-1)
    wnu = np.sum(w * nu, axis=-1)
    anu = np.sum(a * nu, axis=-1)
    return anu / rd - d * wa * wnu / (rd * r2)


# -- parameterized Nystrom kernels ---------------------------------------


def _boundary_frame(domain: StarDomain2D, tau):
    tau = _wrap_angle(np.asarray(tau, dtype=float))
    x = domain.centered(tau)
    d1 = domain.curve.first_derivative(tau)
    speed = np.linalg.norm(d1, axis=-1)
    nu = np.stack([d1[..., 1], -d1[..., 0]], axis=-1) / speed[..., None]
    return x, d1, speed, nu


def kernel_K22(domain: StarDomain2D, t, tau):
    """Boundary double-layer kernel, continuous across the diagonal.

    Off-diagonal: ``2 (x(t)-x(tau)).nu(tau) |x'(tau)| / |x(t)-x(tau)|^2``;
    on the diagonal the limit ``x''(t).nu(t) / |x'(t)|``.
    """
    t = _wrap_angle(np.asarray(t, dtype=float))
    tau = _wrap_angle(np.asarray(tau, dtype=float))
    t, tau = np.broadcast_arrays(t, tau)
    xt = domain.centered(t)
    xtau, _, speed_tau, nu_tau = _boundary_frame(domain, tau)

    diff = xt - xtau
    dist2 = np.sum(diff * diff, axis=-1)
    on_diag = dist2 < 1e-28
    safe = np.where(on_diag, 1.0, dist2)
    off = 2.0 * np.sum(diff * nu_tau, axis=-1) * speed_tau / safe

    d1t = domain.curve.first_derivative(t)
    d2t = domain.curve.second_derivative(t)
    speed_t = np.linalg.norm(d1t, axis=-1)
    nut = np.stack([d1t[..., 1], -d1t[..., 0]], axis=-1) / speed_t[..., None]
    diag = np.sum(d2t * nut, axis=-1) / speed_t
    return np.where(on_diag, diag, off)


def kernel_K21(domain: StarDomain2D, t, xi, tau):
    """Volume-to-boundary log kernel ``2 ln|p(1,t) - p(xi,tau)| J(xi,tau)``."""
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi, dtype=float)
    tau = np.asarray(tau, dtype=float)
    xt = domain.centered(t)
    xtau = domain.centered(tau)
    diff = xt - xi[..., None] * xtau
    dist2 = np.sum(diff * diff, axis=-1)
    J = domain.jacobian(xi, tau)
    if np.any(dist2 == 0.0):
        raise ValueError("K21 evaluated at a boundary collocation point")
    # J -> 0 kills the kernel at the center even though log(0) diverges
    return np.where(J == 0.0, 0.0, np.log(dist2) * J)


def kernel_K12(domain: StarDomain2D, sigma: ConductivityField, eta, t, tau):
    """Boundary-to-volume kernel: normal derivative of the dipole factor.

    Equals ``d/dnu(tau)[ (x-y).grad ln sigma(x) / |x-y|^2 ] |x'(tau)|`` with
    ``x = p(eta,t)`` interior and ``y = p(1,tau)`` on the boundary, evaluated
    in closed form.
    """
    eta = np.asarray(eta, dtype=float)
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    x = domain.map(eta, t)
    y, _, speed, nu = _boundary_frame(domain, tau)
    y = y + domain.center
    a = sigma.grad_log_sigma(x)
    w = y - x
    if np.any(np.sum(w * w, axis=-1) < 1e-24):
        warnings.warn("K12 evaluated within 1e-12 of a boundary point", RuntimeWarning)
    return -dipole_normal_factor(w, nu, a, 2) * speed


def kernel_K11(domain: StarDomain2D, sigma: ConductivityField, eta, t, xi, tau):
    """Raw volume kernel ``(p(xi,tau)-p(eta,t)).grad ln sigma(p(eta,t))
    / |p(eta,t)-p(xi,tau)|^2 * J(xi,tau)``; finite only off the diagonal."""
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    xt = domain.centered(t)
    xtau = domain.centered(tau)
    diff = xi[..., None] * xtau - eta[..., None] * xt  # y - x, centered
    dist2 = np.sum(diff * diff, axis=-1)
    if np.any(dist2 == 0.0):
        raise ValueError("raw K11 evaluated on the diagonal")
    a = sigma.grad_log_sigma(domain.map(eta, t))
    return np.sum(diff * a, axis=-1) / dist2 * domain.jacobian(xi, tau)


def kernel_K11_split(domain: StarDomain2D, sigma: ConductivityField, eta, t, xi, tau):
    """Singularity split of K11 into a continuous part plus a cotangent part.

    Returns ``(smooth, cot_coefficient)`` with

        K11(eta,t; xi,tau) = smooth + cot_coefficient * cot((tau - t)/2).

    ``smooth`` is continuous across the diagonal ``(xi,tau) = (eta,t)`` where
    its closed-form limit involves the curvature data ``x''``; the split is
    meaningful on the layer ``xi = eta`` (elsewhere both parts carry an
    artificial pole at ``tau = t`` that cancels in the sum).  Near-diagonal
    arguments (same radius, angle difference below 1e-8) are routed to the
    diagonal formula to avoid catastrophic cancellation.
    """
    eta = np.asarray(eta, dtype=float)
    t = _wrap_angle(np.asarray(t, dtype=float))
    xi = np.asarray(xi, dtype=float)
    tau = _wrap_angle(np.asarray(tau, dtype=float))
    if np.any(eta <= 0.0):
        raise ValueError("collocation radius must be positive")
    eta, t, xi, tau = np.broadcast_arrays(eta, t, xi, tau)

    xt = domain.centered(t)
    d1t = domain.curve.first_derivative(t)
    d2t = domain.curve.second_derivative(t)
    speed = np.linalg.norm(d1t, axis=-1)
    nut = np.stack([d1t[..., 1], -d1t[..., 0]], axis=-1) / speed[..., None]
    theta_t = d1t / speed[..., None]

    a = sigma.grad_log_sigma(domain.map(eta, t))
    G1 = np.sum(nut * a, axis=-1)
    G2 = np.sum(theta_t * a, axis=-1)

    xtau = domain.centered(tau)
    J = domain.jacobian(xi, tau)
    diff = xi[..., None] * xtau - eta[..., None] * xt
    dist2 = np.sum(diff * diff, axis=-1)

    dt_wrapped = np.mod(tau - t + np.pi, 2.0 * np.pi) - np.pi
    on_diag = (np.abs(xi - eta) < 1e-14) & (np.abs(dt_wrapped) < 1e-8)

    curv_nu = np.sum(d2t * nut, axis=-1)
    curv_th = np.sum(d2t * theta_t, axis=-1)
    Jt = domain.jacobian(eta, t)
    diag = Jt * (G1 * curv_nu + G2 * curv_th) / (2.0 * eta * speed**2)

    safe_dist2 = np.where(on_diag, 1.0, dist2)
    half = np.where(on_diag, 1.0, dt_wrapped) / 2.0
    kappa1 = np.sum(diff * nut, axis=-1) / safe_dist2
    kappa2 = np.sum(diff * theta_t, axis=-1) / safe_dist2 - (
        np.cos(half) / np.sin(half)
    ) / (2.0 * eta * speed)
    smooth = np.where(on_diag, diag, J * (G1 * kappa1 + G2 * kappa2))

    cot_coefficient = (J / eta) * G2 / (2.0 * speed)
    return smooth, cot_coefficient

"""Parametric star-shaped domains in 2D and 3D.

2D domains are described by a smooth closed curve ``x(t)`` (2pi-periodic,
centered at the origin) plus a center point ``P0``; the physical boundary
is ``x(t) + P0``.  The rectangle ``[0,1] x [0,2pi]`` maps onto the closure
of the domain through ``p(eta, t) = eta * x(t) + P0``, which is one-to-one
away from the center.  Star-shapedness with respect to ``P0`` is equivalent
to ``x(t) . nu(t) > 0`` and makes the Jacobian of that map positive.

3D domains are radial graphs over the unit sphere, ``y = r(theta, phi) *
(sin th cos ph, sin th sin ph, cos th)`` with ``r > 0``.

All curve and surface data (values and the analytic derivatives the
singular quadrature weights require) are supplied as vectorized closures;
finite differences are never used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from matplotlib.path import Path

__all__ = [
    "ParametricCurve2D",
    "StarDomain2D",
    "SurfacePatch3D",
    "circle_domain",
    "ellipse_domain",
    "heart_domain",
    "sphere_surface",
    "pinched_ball_surface",
]

TWO_PI = 2.0 * np.pi


def _wrap_angle(t):
    """Normalize angles to [0, 2pi)."""
    return np.mod(t, TWO_PI)


@dataclass(frozen=True)
class ParametricCurve2D:
    """Closed 2pi-periodic curve given by value and two derivatives.

    Each callable accepts a scalar or ndarray of angles ``t`` and returns
    an array of shape ``t.shape + (2,)``.  The curve must be regular
    (``|x'(t)| > 0`` everywhere).
    """

    point: Callable[[np.ndarray], np.ndarray]
    first_derivative: Callable[[np.ndarray], np.ndarray]
    second_derivative: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class StarDomain2D:
    """Star-shaped 2D domain: centered curve plus center point.

    ``curve`` holds the origin-centered boundary ``x(t)``; the physical
    boundary is ``x(t) + center``.
    """

    curve: ParametricCurve2D
    center: np.ndarray
    name: str = "custom"
    _polygon: Path = field(init=False, repr=False, compare=False)
    _polygon_pts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(2)
        object.__setattr__(self, "center", center)
        # dense boundary polygon, used only for point-location queries
        t = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
        pts = self.boundary(t)[0]
        object.__setattr__(self, "_polygon", Path(pts))
        object.__setattr__(self, "_polygon_pts", pts)

    # -- boundary data -------------------------------------------------

    def boundary(self, t):
        """Boundary point and derivatives, ``(x(t)+P0, x'(t), x''(t))``."""
        t = _wrap_angle(np.asarray(t, dtype=float))
        return (
            self.curve.point(t) + self.center,
            self.curve.first_derivative(t),
            self.curve.second_derivative(t),
        )

    def centered(self, t):
        """Centered boundary point ``x(t)`` (no ``P0`` shift)."""
        return self.curve.point(_wrap_angle(np.asarray(t, dtype=float)))

    def outward_normal(self, t):
        """Unit outward normal ``nu(t) = (x2', -x1') / |x'|``."""
        d1 = self.curve.first_derivative(_wrap_angle(np.asarray(t, dtype=float)))
        speed = np.linalg.norm(d1, axis=-1)
        if np.any(speed <= 0.0) or not np.all(np.isfinite(speed)):
            raise ValueError("invalid geometry: curve derivative vanishes")
        return np.stack([d1[..., 1], -d1[..., 0]], axis=-1) / speed[..., None]

    # -- rectangle-to-domain map ----------------------------------------

    def map(self, eta, t):
        """Map ``(eta, t) in [0,1] x [0,2pi]`` to a point of the closure."""
        eta = np.asarray(eta, dtype=float)
        if np.any(eta < 0.0) or np.any(eta > 1.0):
            raise ValueError("radial coordinate must lie in [0, 1]")
        x = self.centered(t)
        return eta[..., None] * x + self.center

    def jacobian(self, xi, tau):
        """Jacobian ``J(xi, tau) = xi * x(tau).nu(tau) * |x'(tau)|`` of the map."""
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0.0) or np.any(xi > 1.0):
            raise ValueError("radial coordinate must lie in [0, 1]")
        tau = _wrap_angle(np.asarray(tau, dtype=float))
        x = self.curve.point(tau)
        d1 = self.curve.first_derivative(tau)
        # x . nu * |x'| == x . (x2', -x1'), no normalization needed
        return xi * (x[..., 0] * d1[..., 1] - x[..., 1] * d1[..., 0])

    # -- point location --------------------------------------------------

    def contains(self, points, radius=0.0):
        """Vectorized inside test (polygon-based, 4096-gon resolution).

        ``radius > 0`` shrinks the domain: a point counts as inside only
        if the polygon test passes with that safety margin.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self._polygon.contains_points(pts, radius=-abs(radius))

    def boundary_distance(self, points):
        """Distance from each point to the sampled boundary polygon."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.linalg.norm(pts[:, None, :] - self._polygon_pts[None, :, :], axis=-1)
        return d.min(axis=1)

    def diameter(self):
        """Approximate domain diameter from the sampled boundary."""
        pts = self._polygon_pts[::16]
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        return float(d.max())


def curve_eval(domain: StarDomain2D, t):
    """Boundary point with derivatives; see :meth:`StarDomain2D.boundary`."""
    return domain.boundary(t)


def outward_normal(domain: StarDomain2D, t):
    return domain.outward_normal(t)


def domain_map(domain: StarDomain2D, eta, t):
    return domain.map(eta, t)


def jacobian(domain: StarDomain2D, xi, tau):
    return domain.jacobian(xi, tau)


# -- built-in curves ----------------------------------------------------


def circle_domain(radius=1.0, center=(0.0, 0.0)):
    r = float(radius)
    curve = ParametricCurve2D(
        point=lambda t: np.stack([r * np.cos(t), r * np.sin(t)], axis=-1),
        first_derivative=lambda t: np.stack([-r * np.sin(t), r * np.cos(t)], axis=-1),
        second_derivative=lambda t: np.stack([-r * np.cos(t), -r * np.sin(t)], axis=-1),
    )
    return StarDomain2D(curve=curve, center=np.asarray(center, dtype=float), name="circle")


def ellipse_domain(a=1.0, b=0.5, center=(0.5, 1.0)):
    a, b = float(a), float(b)
    curve = ParametricCurve2D(
        point=lambda t: np.stack([a * np.cos(t), b * np.sin(t)], axis=-1),
        first_derivative=lambda t: np.stack([-a * np.sin(t), b * np.cos(t)], axis=-1),
        second_derivative=lambda t: np.stack([-a * np.cos(t), -b * np.sin(t)], axis=-1),
    )
    return StarDomain2D(curve=curve, center=np.asarray(center, dtype=float), name="ellipse")


def heart_domain(center=(0.5, 1.0)):
    """Heart-shaped curve ``(0.2 cos t, 0.4 sin t - 0.3 sin^2 t)``."""

    def point(t):
        return np.stack(
            [0.2 * np.cos(t), 0.4 * np.sin(t) - 0.3 * np.sin(t) ** 2], axis=-1
        )

    def d1(t):
        return np.stack(
            [-0.2 * np.sin(t), 0.4 * np.cos(t) - 0.3 * np.sin(2.0 * t)], axis=-1
        )

    def d2(t):
        return np.stack(
            [-0.2 * np.cos(t), -0.4 * np.sin(t) - 0.6 * np.cos(2.0 * t)], axis=-1
        )

    return StarDomain2D(
        curve=ParametricCurve2D(point, d1, d2),
        center=np.asarray(center, dtype=float),
        name="heart",
    )


# -- 3D surfaces ---------------------------------------------------------


@dataclass(frozen=True)
class SurfacePatch3D:
    """Star-shaped surface ``y = r(theta, phi) * unit_direction``.

    ``radius`` and its analytic partials accept broadcastable arrays
    ``(theta, phi)`` with ``theta in [0, pi]`` and 2pi-periodic ``phi``.
    """

    radius: Callable[[np.ndarray, np.ndarray], np.ndarray]
    radius_dtheta: Callable[[np.ndarray, np.ndarray], np.ndarray]
    radius_dphi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "custom"

    def direction(self, theta, phi):
        st, ct = np.sin(theta), np.cos(theta)
        return np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)

    def point(self, theta, phi):
        return self.radius(theta, phi)[..., None] * self.direction(theta, phi)

    def normal_and_area(self, theta, phi):
        """Unit outward normal and area factor relative to d(sphere).

        The area factor ``A`` satisfies ``ds = A(theta, phi) dsigma`` with
        ``dsigma = sin(theta) dtheta dphi`` the spherical measure:
        ``A = r sqrt(r^2 + r_theta^2 + (r_phi / sin theta)^2)``.
        At the poles ``A`` degenerates to 0 and the normal is the radial limit.
        """
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        r = self.radius(theta, phi)
        rt = self.radius_dtheta(theta, phi)
        rp = self.radius_dphi(theta, phi)
        st, ct = np.sin(theta), np.cos(theta)
        safe_st = np.where(np.abs(st) < 1e-14, 1.0, st)
        rp_over_st = np.where(np.abs(st) < 1e-14, 0.0, rp / safe_st)

        rhat = self.direction(theta, phi)
        that = np.stack([ct * np.cos(phi), ct * np.sin(phi), -st], axis=-1)
        phat = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi + theta)], axis=-1)

        raw = r[..., None] * rhat - rt[..., None] * that - rp_over_st[..., None] * phat
        norm = np.linalg.norm(raw, axis=-1)
        normal = raw / norm[..., None]
        area = r * norm
        return normal, area

    def contains(self, points, shrink=0.0):
        """Inside test for a radial graph: ``|p| < (1-shrink) * r(dir p)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rho = np.linalg.norm(pts, axis=-1)
        theta = np.arccos(np.clip(np.divide(pts[:, 2], np.where(rho == 0, 1.0, rho)), -1, 1))
        phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), TWO_PI)
        rb = self.radius(theta, phi)
        return rho < (1.0 - shrink) * rb


def surface_eval(surface: SurfacePatch3D, theta, phi):
    """Surface point, unit outward normal and area factor at ``(theta, phi)``.

    At the poles (``sin theta = 0``) the point is the analytic limit and the
    area factor is 0; the reported normal is the radial limit direction.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    point = surface.point(theta, phi)
    at_pole = np.abs(np.sin(theta)) < 1e-14
    normal, area = surface.normal_and_area(theta, phi)
    if np.any(at_pole):
        area = np.where(at_pole, 0.0, area)
    return point, normal, area


def sphere_surface(radius=1.0):
    r = float(radius)
    zero = lambda theta, phi: np.zeros(np.broadcast(theta, phi).shape)
    return SurfacePatch3D(
        radius=lambda theta, phi: np.full(np.broadcast(theta, phi).shape, r),
        radius_dtheta=zero,
        radius_dphi=zero,
        name="sphere",
    )


def pinched_ball_surface():
    """Pinched ball ``r = sqrt(1.44 + 0.5 cos(2 phi) (cos(2 theta) - 1))``."""

    def r2(theta, phi):
        return 1.44 + 0.5 * np.cos(2.0 * phi) * (np.cos(2.0 * theta) - 1.0)

    def radius(theta, phi):
        return np.sqrt(r2(theta, phi))

    def radius_dtheta(theta, phi):
        return -np.cos(2.0 * phi) * np.sin(2.0 * theta) / (2.0 * radius(theta, phi))

    def radius_dphi(theta, phi):
        return -np.sin(2.0 * phi) * (np.cos(2.0 * theta) - 1.0) / (2.0 * radius(theta, phi))

    return SurfacePatch3D(radius, radius_dtheta, radius_dphi, name="pinched_ball")

"""Quadrature machinery: singular trigonometric rules, layered radial
scheme with per-layer angular refinement, Gauss-Legendre, and a slow
polar-coordinate oracle for volume potentials.

The trigonometric rules are the classical spectral ones on the uniform
periodic grid ``t_j = j pi / n``, ``j = 0..2n-1``:

* log rule:  ``(1/2pi) int g(tau) ln(4 sin^2((tau-t)/2)) dtau ~= sum F_j(t;n) g(t_j)``
* p.v. rule: ``(1/2pi) p.v. int g(tau) cot((tau-t)/2) dtau  ~= sum T_j(t;n) g(t_j)``

both exact for trigonometric polynomials of degree < n, with collocation
angle ``t`` allowed anywhere (not only on the grid).

The radial scheme halves each of the ``N`` radial intervals, applies the
midpoint rule on the first and last interval and Simpson elsewhere, and
assigns each refined radius ``k/(2N)`` its own angular count
``n_i = 2^{k1} * 2^{floor(log2(2i-1))}`` so that all cells keep comparable
area.  The resulting composite weights ``c_k`` make the rule exact whenever
the mapped integrand is linear in the radial coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import StarDomain2D

__all__ = [
    "RadialScheme",
    "adaptive_layers",
    "radial_weights",
    "trig_log_weights",
    "trig_cot_weights",
    "gauss_legendre",
    "volume_quadrature",
    "brute_volume_potential",
]


# -- trigonometric rules with singular kernels ----------------------------


def trig_log_weights(t, n):
    """Weights ``F_j(t; n)``, ``j = 0..2n-1``, of the log-kernel rule.

    ``F_j = -(1/n) [ sum_{m=1}^{n-1} cos(m(t-t_j))/m + cos(n(t-t_j))/(2n) ]``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    t = float(t)
    tj = np.arange(2 * n) * np.pi / n
    theta = t - tj
    m = np.arange(1, n)
    main = (np.cos(np.outer(theta, m)) / m).sum(axis=1) if n > 1 else 0.0
    return -(main + np.cos(n * theta) / (2.0 * n)) / n


def _cot_weight_values(theta, n):
    """Closed form of ``T(theta; n)`` via the Dirichlet-type sine sum."""
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    half = theta / 2.0
    s = np.sin(half)
    tiny = np.abs(s) < 1e-7
    safe = np.where(tiny, 1.0, s)
    # sum_{m=1}^{n-1} sin(m theta) = (cos(theta/2) - cos((n-1/2) theta)) / (2 sin(theta/2))
    sine_sum = (np.cos(half) - np.cos((n - 0.5) * theta)) / (2.0 * safe)
    vals = -sine_sum / n - np.sin(n * theta) / (2.0 * n)
    return np.where(tiny, -0.5 * n * theta, vals)


def trig_cot_weights(t, n):
    """Weights ``T_j(t; n)`` of the principal-value cotangent rule."""
    if n < 1:
        raise ValueError("n must be >= 1")
    tj = np.arange(2 * n) * np.pi / n
    return _cot_weight_values(float(t) - tj, n)


def trig_cot_weight_matrix(ts, n):
    """Rows of cotangent weights for a batch of collocation angles."""
    ts = np.asarray(ts, dtype=float)
    tj = np.arange(2 * n) * np.pi / n
    return _cot_weight_values(ts[:, None] - tj[None, :], n)


def trig_log_weight_matrix(ts, n):
    """Rows of log-rule weights for a batch of collocation angles."""
    ts = np.asarray(ts, dtype=float)
    tj = np.arange(2 * n) * np.pi / n
    theta = ts[:, None] - tj[None, :]
    out = np.cos(n * theta) / (2.0 * n)
    for m in range(1, n):
        out += np.cos(m * theta) / m
    return -out / n


def gauss_legendre(n):
    """Standard Gauss-Legendre nodes and weights on ``[-1, 1]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.polynomial.legendre.leggauss(n)


# -- adaptive radial layering ---------------------------------------------


def radial_weights(N):
    """Composite radial weights ``c_k``, ``k = 1..2N-1`` (0-indexed array).

    Midpoint rule on the innermost and outermost radial interval, Simpson
    elsewhere.  Odd ``k = 2i-1`` are interval midpoints, even ``k = 2i``
    shared interval endpoints; the endpoint ``k = 2N`` lies on the boundary
    and never enters the volume rule.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    c = np.zeros(2 * N - 1)
    for i in range(1, N + 1):  # interval index, 1-based
        mid = 2 * i - 2  # 0-based position of xi_{i-1/2}
        if i in (1, N):
            c[mid] += 1.0 / N
        else:
            c[mid] += 4.0 / (6.0 * N)
            c[mid - 1] += 1.0 / (6.0 * N)
            c[mid + 1] += 1.0 / (6.0 * N)
    return c


def _layer_exponents(count, k1):
    k = np.zeros(count, dtype=int)
    k[0] = 0
    idx = np.arange(2, count + 1)
    k[1:] = np.floor(np.log2(2 * idx - 1)).astype(int)
    return k1 + k


@dataclass(frozen=True)
class RadialScheme:
    """Layered radial grid: refined radii, per-layer angular counts, weights.

    ``radii[k] = (k+1)/(2N)`` for ``k = 0..2N-1``; layer ``k`` carries
    ``2 * counts[k]`` uniformly spaced angles ``j pi / counts[k]``.  The last
    layer (``radii = 1``) is the boundary ring used by the surface density;
    ``weights`` covers the interior layers ``k = 0..2N-2`` only.
    """

    N: int
    k1: int
    radii: np.ndarray
    counts: np.ndarray
    weights: np.ndarray

    def angles(self, layer):
        """Angular nodes ``j pi / n`` of the given 0-based layer."""
        n = int(self.counts[layer])
        return np.arange(2 * n) * (np.pi / n)

    @property
    def interior_layers(self):
        return 2 * self.N - 1

    def interior_node_count(self):
        return int(2 * self.counts[: 2 * self.N - 1].sum())

    def boundary_node_count(self):
        return int(2 * self.counts[2 * self.N - 1])


def adaptive_layers(N, k1):
    """Build the layered scheme for ``N`` radial intervals, base exponent ``k1``.

    The per-layer counts follow ``n_i = 2^{k1 + floor(log2(2i-1))}`` (with
    ``n_1 = 2^{k1}``), which keeps the cell-area ratio between any layer and
    the innermost one inside ``[1/3, 3]`` under the disk-area model where
    layer ``i`` has area proportional to ``2i - 1``.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if k1 < 0:
        raise ValueError("k1 must be >= 0")
    count = 2 * N
    exponents = _layer_exponents(count, k1)
    counts = 2**exponents
    idx = np.arange(1, count + 1)
    # disk-model cell-area ratio |s_i| / |s_1| with |ring_i| ~ (2i-1); each
    # layer may use either of the two triangle partitions (2 or 3 per cell)
    ratio = (2 * idx - 1) / (2.0 ** (exponents - exponents[0]) * 2.0)
    ratio3 = ratio * (2.0 / 3.0)
    ok = lambda r: (r >= 1.0 / 3.0) & (r <= 3.0)
    if not np.all(ok(ratio) | ok(ratio3)):
        raise ValueError("layer refinement violates the cell-area ratio criterion")
    return RadialScheme(
        N=int(N),
        k1=int(k1),
        radii=idx / (2.0 * N),
        counts=counts,
        weights=radial_weights(N),
    )


def volume_quadrature(domain: StarDomain2D, s: Callable, scheme: RadialScheme):
    """Integrate ``s`` over the domain with the layered composite rule.

    ``s`` maps an ``(..., 2)`` array of points to ``(...)`` values.  The rule
    is ``sum_k c_k (2pi / 2n_k) sum_j s(p(xi_k, t_j)) J(xi_k, t_j)``.
    """
    total = 0.0
    for k in range(scheme.interior_layers):
        xi = scheme.radii[k]
        tj = scheme.angles(k)
        pts = domain.map(np.full_like(tj, xi), tj)
        vals = np.asarray(s(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            j = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise ValueError(
                f"integrand not finite at layer radius {xi:.6g}, angle index {j}"
            )
        J = domain.jacobian(np.full_like(tj, xi), tj)
        n = scheme.counts[k]
        total += scheme.weights[k] * (2.0 * np.pi / (2 * n)) * float(np.sum(vals * J))
    return total


# -- brute-force volume-potential oracle ----------------------------------


def _ray_crossings(domain: StarDomain2D, x, angles, samples=4097, iters=60):
    """Distances from ``x`` to the boundary along each angle (all crossings).

    Crossings are sign changes of the ray/boundary cross product on a dense
    parameter grid, sharpened by bisection; exact zeros at grid samples
    (symmetric configurations) are taken directly.  Intended for strictly
    interior ``x``.
    """
    tgrid = np.arange(samples) * (2.0 * np.pi / samples)
    bpts = domain.boundary(tgrid)[0]
    rel = bpts - x  # (S, 2)
    e = np.stack([np.cos(angles), np.sin(angles)], axis=-1)  # (A, 2)
    cross = rel[None, :, 0] * e[:, None, 1] - rel[None, :, 1] * e[:, None, 0]
    dots = rel[None, :, 0] * e[:, None, 0] + rel[None, :, 1] * e[:, None, 1]

    sign = np.sign(cross)
    brackets = np.nonzero(sign * np.roll(sign, -1, axis=1) < 0.0)
    exact = np.nonzero((sign == 0.0) & (dots > 0.0))
    step = 2.0 * np.pi / samples

    lo = tgrid[brackets[1]]
    hi = lo + step
    ang = angles[brackets[0]]
    ca, sa = np.cos(ang), np.sin(ang)

    def cross_at(tq):
        b = domain.boundary(tq)[0] - x
        return b[:, 0] * sa - b[:, 1] * ca

    flo = cross_at(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fmid = cross_at(mid)
        left = flo * fmid <= 0.0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fmid)
    tstar = 0.5 * (lo + hi)
    b = domain.boundary(tstar)[0] - x
    r = b[:, 0] * ca + b[:, 1] * sa

    ray_idx = np.concatenate([brackets[0], exact[0]])
    r_all = np.concatenate([r, dots[exact]])
    out = [np.sort(r_all[(ray_idx == i) & (r_all > 0)]) for i in range(len(angles))]
    return out


def brute_volume_potential(domain: StarDomain2D, density: Callable, x, n_angles=2048, n_radial=48):
    """Reference value of ``int_Omega Phi(x, y) rho(y) dy`` (2D, slow).

    Polar coordinates centered at ``x`` remove the logarithmic singularity
    (``r ln r -> 0``); a cubic radial substitution flattens the remaining
    endpoint weakness so Gauss-Legendre converges fast, and the periodic
    trapezoid handles the angular direction.  Accuracy is ~1e-8 and better
    for smooth densities when every ray meets the boundary once.
    """
    x = np.asarray(x, dtype=float).reshape(2)
    angles = np.arange(n_angles) * (2.0 * np.pi / n_angles)
    crossings = _ray_crossings(domain, x, angles)
    gn, gw = gauss_legendre(n_radial)
    u = 0.5 * (gn + 1.0)  # nodes on [0, 1]
    uw = 0.5 * gw

    total = 0.0
    for i, ang in enumerate(angles):
        rs = crossings[i]
        if rs.size == 0:
            continue
        e = np.array([np.cos(ang), np.sin(ang)])
        # innermost segment [0, rs[0]] with the log endpoint at r = 0:
        # substitute r = R u^3 so the integrand gains u^5 log u smoothness
        R = rs[0]
        r = R * u**3
        w = uw * 3.0 * R * u**2
        pts = x[None, :] + r[:, None] * e[None, :]
        vals = np.where(r > 0, -np.log(np.where(r > 0, r, 1.0)), 0.0) * r * density(pts)
        seg = float(np.sum(w * vals))
        # remaining visible segments are smooth: plain Gauss per segment
        for a, b in zip(rs[1::2], rs[2::2]):
            r = a + (b - a) * u
            w = uw * (b - a)
            pts = x[None, :] + r[:, None] * e[None, :]
            seg += float(np.sum(w * (-np.log(r)) * r * density(pts)))
        total += seg
    return total * (2.0 * np.pi / n_angles) / (2.0 * np.pi)

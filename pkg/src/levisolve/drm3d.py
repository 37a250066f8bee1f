"""3D dual reciprocity solver on star-shaped surfaces.

The surface is discretized by a Gauss-Legendre x uniform product grid in
``(cos theta, phi)``; smooth surface integrals use that rule directly.
Weakly singular integrals (collocation point on the surface) rotate the
sphere so the collocation direction becomes the north pole and apply the
same product rule in rotated coordinates: the spherical area element then
cancels the ``1/|x-y|`` singularity.  Integrands known analytically are
evaluated at the rotated nodes directly; densities known only at the grid
nodes are carried over by local biquadratic interpolation in ``(theta,
phi)``.

The system mirrors the 2D dual reciprocity structure: interior rows at the
basis nodes, boundary rows at the surface grid nodes, with the boundary
trace of the transformed volume potential carrying the half-jump.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SurfacePatch3D
from .drm import RbfBasis, rbf_f, rbf_fhat, rbf_fhat_prime
from .linalg import condition_estimate, lu_solve
from .problems import ProblemSpec
from .quadrature import gauss_legendre

__all__ = [
    "SphereGrid",
    "sphere_grid",
    "singular_surface_integral",
    "assemble_drm3d",
    "solve_drm3d",
    "eval_drm3d_solution",
    "Drm3dSolution",
    "lattice_nodes_3d",
]

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class SphereGrid:
    """Product quadrature grid on a star-shaped surface.

    ``2 N^2`` nodes at ``theta_j = arccos(gauss node)``, ``phi_k = k pi / N``
    (flat index ``j * 2N + k``, polar angle ascending).  ``weights`` are the
    product quadrature weights including the surface area factor, so
    ``integral over surface of g ~= sum(weights * g(points))``.
    """

    N: int
    theta: np.ndarray
    phi: np.ndarray
    gauss_weights: np.ndarray
    directions: np.ndarray      # (2N^2, 3) unit directions
    points: np.ndarray          # (2N^2, 3) surface nodes
    normals: np.ndarray         # (2N^2, 3)
    area_factors: np.ndarray    # (2N^2,)
    weights: np.ndarray         # (2N^2,) includes area factors

    @property
    def size(self):
        return 2 * self.N * self.N


def sphere_grid(surface: SurfacePatch3D, N: int) -> SphereGrid:
    if N < 2:
        raise ValueError("polar count must be >= 2")
    t, w = gauss_legendre(N)
    theta = np.arccos(t[::-1])           # ascending polar angle
    wtheta = w[::-1]
    phi = np.arange(2 * N) * (np.pi / N)
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    dirs = surface.direction(TH, PH).reshape(-1, 3)
    pts = surface.point(TH, PH).reshape(-1, 3)
    normals, area = surface.normal_and_area(TH, PH)
    wq = (np.pi / N) * np.repeat(wtheta, 2 * N) * area.reshape(-1)
    return SphereGrid(
        N=int(N),
        theta=theta,
        phi=phi,
        gauss_weights=wtheta,
        directions=dirs,
        points=pts,
        normals=normals.reshape(-1, 3),
        area_factors=area.reshape(-1),
        weights=wq,
    )


def _rotation_to(direction):
    """Rotation matrix sending the north pole ``e3`` to ``direction``."""
    d = np.asarray(direction, dtype=float)
    ct = np.clip(d[2], -1.0, 1.0)
    st = np.sqrt(max(0.0, 1.0 - ct * ct))
    if st < 1e-15:
        cp, sp = 1.0, 0.0
    else:
        cp, sp = d[0] / st, d[1] / st
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry


def _rotated_polar_rule(N):
    """Gauss nodes in the rotated polar angle itself, with explicit sin factor.

    Placing the Gauss nodes in ``theta'`` (not ``cos theta'``) keeps the
    integrand analytic after the ``sin theta'`` measure cancels the
    ``1/|x-y|`` singularity at the pole; in the ``cos`` variable the kernel
    would retain an inverse-square-root endpoint singularity.
    """
    t, w = gauss_legendre(N)
    theta = (t + 1.0) * (np.pi / 2.0)
    wtheta = w * (np.pi / 2.0) * np.sin(theta)
    return theta, wtheta


def _rotated_nodes(surface: SurfacePatch3D, grid: SphereGrid, direction):
    """Quadrature node data in coordinates rotated so ``direction`` is the pole."""
    N = grid.N
    tp, wp = _rotated_polar_rule(N)
    php = np.arange(2 * N) * (np.pi / N)
    TH, PH = np.meshgrid(tp, php, indexing="ij")
    st, ct = np.sin(TH), np.cos(TH)
    local = np.stack([st * np.cos(PH), st * np.sin(PH), ct], axis=-1).reshape(-1, 3)
    T = _rotation_to(direction)
    dirs = local @ T.T
    theta = np.arccos(np.clip(dirs[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2.0 * np.pi)
    pts = surface.point(theta, phi)
    normals, area = surface.normal_and_area(theta, phi)
    wq = (np.pi / N) * np.repeat(wp, 2 * N) * area
    return theta, phi, pts, normals, wq


def _interp_stencil(grid: SphereGrid, theta, phi):
    """Biquadratic (3x3 Lagrange) interpolation from the grid to ``(theta, phi)``.

    Returns ``(indices, weights)`` of shape ``(len(theta), 9)``; polar-cap
    queries clamp the stencil to the border rows (quadratic extrapolation).
    """
    N = grid.N
    if N < 3:
        raise ValueError("biquadratic interpolation needs at least 3 polar nodes")
    th_nodes = grid.theta
    ti = np.clip(np.searchsorted(th_nodes, theta) - 1, 0, N - 3)
    dphi = np.pi / N
    pb = np.floor(phi / dphi).astype(int)

    idx = np.empty((len(theta), 9), dtype=int)
    wts = np.empty((len(theta), 9))
    tcols = np.stack([ti, ti + 1, ti + 2], axis=1)           # (Q, 3)
    tvals = th_nodes[tcols]
    pcols = np.stack([pb - 1, pb, pb + 1], axis=1)           # (Q, 3) unwrapped
    pvals = pcols * dphi

    def lagrange3(nodes, x):
        x0, x1, x2 = nodes[:, 0], nodes[:, 1], nodes[:, 2]
        w0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
        w1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
        w2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))
        return np.stack([w0, w1, w2], axis=1)

    wt = lagrange3(tvals, theta)
    wp = lagrange3(pvals, phi)
    pcols = np.mod(pcols, 2 * N)
    for a in range(3):
        for b in range(3):
            idx[:, 3 * a + b] = tcols[:, a] * (2 * N) + pcols[:, b]
            wts[:, 3 * a + b] = wt[:, a] * wp[:, b]
    return idx, wts


def _kernel_values(kind, x, pts, normals):
    w = pts - x[None, :]
    r2 = np.sum(w * w, axis=-1)
    r = np.sqrt(r2)
    if kind == "single_layer":
        return 1.0 / (FOUR_PI * r)
    if kind == "double_layer":
        # d/dnu(y) Phi(x, y) = (x - y).nu / (4 pi |x - y|^3)
        return -np.sum(w * normals, axis=-1) / (FOUR_PI * r2 * r)
    raise ValueError(f"unknown kernel {kind!r}")


def singular_surface_integral(surface, grid: SphereGrid, kernel, density, index):
    """Weakly singular surface integral at the grid node ``index``.

    ``kernel`` is ``"single_layer"`` or ``"double_layer"``; ``density`` is
    either an array of node values (interpolated to the rotated nodes) or a
    callable evaluated at the rotated surface points directly.
    """
    x = grid.points[index]
    theta, phi, pts, normals, wq = _rotated_nodes(surface, grid, grid.directions[index])
    kv = _kernel_values(kernel, x, pts, normals)
    if callable(density):
        dv = density(pts)
    else:
        density = np.asarray(density, dtype=float)
        idx, wts = _interp_stencil(grid, theta, phi)
        dv = np.sum(wts * density[idx], axis=1)
    return float(np.sum(wq * kv * dv))


def _singular_weight_row(surface, grid: SphereGrid, kernel, index):
    """Weights over grid nodes equivalent to the interpolated rotated rule."""
    x = grid.points[index]
    theta, phi, pts, normals, wq = _rotated_nodes(surface, grid, grid.directions[index])
    kv = _kernel_values(kernel, x, pts, normals) * wq
    idx, wts = _interp_stencil(grid, theta, phi)
    row = np.zeros(grid.size)
    np.add.at(row, idx.ravel(), (wts * kv[:, None]).ravel())
    return row


# -- assembly ---------------------------------------------------------------


def _fhat_normal_tables(basis: RbfBasis, pts, normals):
    """``fhat`` values and normal derivatives at surface points, (P, M)."""
    w = pts[:, None, :] - basis.nodes[None, :, :]
    r = np.linalg.norm(w, axis=-1)
    fhat = r**2 / 6.0 + r**3 / 12.0
    dn = rbf_fhat_prime(r, 3) * np.sum(w * normals[:, None, :], axis=-1) / r
    return fhat, dn


def _dk_matrix_3d(basis: RbfBasis, grid: SphereGrid, X, local_factor=1.0):
    """All transformed volume potentials at interior points: ``(len(X), M)``.

    ``D_k(x) = S[d fhat/dnu](x) - W[fhat](x) - local_factor * fhat_k(x)``
    with the smooth product rule (interior ``x`` only).
    """
    fhat, dn = _fhat_normal_tables(basis, grid.points, grid.normals)
    w = X[:, None, :] - grid.points[None, :, :]
    r2 = np.sum(w * w, axis=-1)
    r = np.sqrt(r2)
    phi = 1.0 / (FOUR_PI * r)
    dlayer = np.sum(w * grid.normals[None, :, :], axis=-1) / (FOUR_PI * r2 * r)
    wq = grid.weights
    local = rbf_fhat(basis.nodes, X, d=3)
    return ((phi * wq) @ dn) - ((dlayer * wq) @ fhat) - local_factor * local


def assemble_drm3d(problem: ProblemSpec, basis: RbfBasis, grid: SphereGrid):
    """Square system over ``(alpha_1..alpha_M, psi at the surface nodes)``."""
    surface = problem.domain
    if not isinstance(surface, SurfacePatch3D):
        raise ValueError("expected a 3D surface problem")
    if basis.dim != 3:
        raise ValueError("basis must be 3D")
    if not np.all(surface.contains(basis.nodes)):
        raise ValueError("basis nodes must lie strictly inside the surface")
    M = basis.size
    P = grid.size
    A = np.zeros((M + P, M + P))
    b = np.zeros(M + P)

    # interior rows at the basis nodes
    X = basis.nodes
    a = problem.sigma.grad_log_sigma(X)
    fhat, dn = _fhat_normal_tables(basis, grid.points, grid.normals)
    w = grid.points[None, :, :] - X[:, None, :]          # y - x
    r2 = np.sum(w * w, axis=-1)
    r = np.sqrt(r2)
    wa = np.sum(w * a[:, None, :], axis=-1)
    wnu = np.sum(w * grid.normals[None, :, :], axis=-1)
    anu = a @ grid.normals.T
    grad_phi_a = wa / (FOUR_PI * r2 * r)                  # grad_x Phi . a
    dipole = (anu / (r2 * r) - 3.0 * wa * wnu / (r2**2 * r)) / FOUR_PI

    wkk = X[:, None, :] - basis.nodes[None, :, :]
    rkk = np.linalg.norm(wkk, axis=-1)
    safe = np.where(rkk == 0.0, 1.0, rkk)
    gradterm = np.where(
        rkk == 0.0, 0.0, rbf_fhat_prime(rkk, 3) / safe * np.sum(wkk * a[:, None, :], axis=-1)
    )
    wq = grid.weights
    dk11 = ((grad_phi_a * wq) @ dn) - ((dipole * wq) @ fhat) - gradterm
    A[:M, :M] = rbf_f(X, X) - dk11
    A[:M, M:] = -dipole * wq[None, :]
    b[:M] = problem.source(X) / problem.sigma.sigma(X)

    # boundary rows at the surface nodes (rotated singular quadrature)
    fhat_x = rbf_fhat(basis.nodes, grid.points, d=3)      # (P, M) local terms
    for i in range(P):
        x = grid.points[i]
        theta, phi, pts, normals, wrot = _rotated_nodes(surface, grid, grid.directions[i])
        sl = _kernel_values("single_layer", x, pts, normals) * wrot
        dl = _kernel_values("double_layer", x, pts, normals) * wrot
        fh, dnh = _fhat_normal_tables(basis, pts, normals)
        dk = sl @ dnh - dl @ fh - 0.5 * fhat_x[i]
        A[M + i, :M] = -2.0 * dk
        idx, wts = _interp_stencil(grid, theta, phi)
        row = np.zeros(P)
        np.add.at(row, idx.ravel(), (wts * (2.0 * dl)[:, None]).ravel())
        A[M + i, M:] = -row
        A[M + i, M + i] += 1.0
    b[M:] = -2.0 * problem.boundary_data(grid.points)
    return A, b


@dataclass(frozen=True)
class Drm3dSolution:
    basis: RbfBasis
    alpha: np.ndarray
    psi: np.ndarray
    grid: SphereGrid
    condition: float

    def volume_density(self, x):
        return rbf_f(self.basis.nodes, np.asarray(x, dtype=float)) @ self.alpha


def solve_drm3d(problem: ProblemSpec, basis: RbfBasis, grid: SphereGrid, estimate_condition=True):
    A, b = assemble_drm3d(problem, basis, grid)
    x = lu_solve(A, b)
    cond = condition_estimate(A) if estimate_condition else np.nan
    return Drm3dSolution(
        basis=basis, alpha=x[: basis.size], psi=x[basis.size :], grid=grid,
        condition=float(cond),
    )


def eval_drm3d_solution(sol: Drm3dSolution, problem: ProblemSpec, x):
    """Field value at strictly interior points (smooth product rule)."""
    single = np.asarray(x, dtype=float).ndim == 1
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if not np.all(problem.domain.contains(pts)):
        raise ValueError("evaluation point outside the domain")
    grid = sol.grid
    dmat = _dk_matrix_3d(sol.basis, grid, pts)
    w = pts[:, None, :] - grid.points[None, :, :]
    r2 = np.sum(w * w, axis=-1)
    dlayer = np.sum(w * grid.normals[None, :, :], axis=-1) / (FOUR_PI * r2 * np.sqrt(r2))
    vals = dmat @ sol.alpha + (dlayer * grid.weights[None, :]) @ sol.psi
    return float(vals[0]) if single else vals


def lattice_nodes_3d(surface: SurfacePatch3D, m: int, radial_margin: float = 0.2, keep=None):
    """Cubic lattice clipped to the surface with a relative radial margin,
    trimmed to exactly ``m`` points (outermost dropped first).

    The default margin keeps nodes clear of the surface by roughly the
    surface mesh width at desk-scale polar counts; the interior collocation
    rows integrate smooth surface kernels whose accuracy collapses closer in.

    ``keep`` optionally filters candidate points (mask-valued callable);
    the interior collocation needs bounded ``1/sigma`` and ``grad ln sigma``
    at the nodes, so problems whose conductivity degenerates inside the
    domain must exclude that region here.
    """
    if m < 1:
        raise ValueError("need at least one interior node")
    tg = np.linspace(0.0, np.pi, 64)
    pg = np.linspace(0.0, 2.0 * np.pi, 128, endpoint=False)
    TH, PH = np.meshgrid(tg, pg, indexing="ij")
    rmax = float(surface.radius(TH, PH).max())

    def lattice(h):
        k = int(np.ceil(rmax / h)) + 1
        ii = (np.arange(-k, k + 1) + 0.5) * h
        gx, gy, gz = np.meshgrid(ii, ii, ii, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=-1)
        pts = pts[surface.contains(pts, shrink=radial_margin)]
        if keep is not None:
            pts = pts[keep(pts)]
        return pts

    lo, hi = 0.05 * rmax / max(1.0, m ** (1.0 / 3.0)), 3.0 * rmax
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if len(lattice(mid)) >= m:
            lo = mid
        else:
            hi = mid
    pts = lattice(lo)
    guard = 0
    while len(pts) < m and guard < 200:
        lo *= 0.98
        pts = lattice(lo)
        guard += 1
    if len(pts) < m:
        raise ValueError(f"could not place {m} interior nodes")
    rho = np.linalg.norm(pts, axis=-1)
    theta = np.arccos(np.clip(pts[:, 2] / np.where(rho == 0, 1.0, rho), -1, 1))
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
    frac = rho / surface.radius(theta, phi)
    order = np.argsort(frac, kind="stable")
    return pts[order[:m]]

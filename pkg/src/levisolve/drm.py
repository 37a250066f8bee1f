"""Dual reciprocity solver: boundary-only treatment of the volume density.

The volume density is expanded in radial basis functions ``f_k = 1 + r_k``
centered at interior nodes; each ``f_k`` is the Laplacian of an explicit
radial ``fhat_k``, so the volume potential of ``f_k`` collapses to boundary
integrals of ``fhat_k`` plus a local term (and its boundary trace picks up
the usual half-jump).  The resulting square system couples the expansion
coefficients with the boundary density collocated at the uniform angle
grid; the only singular piece left is the boundary log kernel, handled by
the spectral log-rule weights.

The volume density never lives on a grid: it is reconstructed anywhere as
``sum_k alpha_k f_k``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path

from .geometry import StarDomain2D
from .linalg import condition_estimate, lu_solve
from .problems import ProblemSpec
from .quadrature import trig_log_weight_matrix, trig_log_weights

__all__ = [
    "RbfBasis",
    "DrmSolution",
    "BoundaryRule",
    "rbf_f",
    "rbf_fhat",
    "rbf_fhat_prime",
    "rbf_grad_fhat",
    "rbf_normal_deriv",
    "dk_interior",
    "dk_boundary",
    "assemble_drm",
    "solve_drm",
    "eval_drm_solution",
    "lattice_nodes",
    "load_nodes",
]


# -- radial basis machinery ------------------------------------------------


def rbf_f(centers, x):
    """``f_k(x) = 1 + |x - x_k|`` for all centers; shape ``x[...] x centers``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x[..., None, :] - centers, axis=-1)
    return 1.0 + r


def rbf_fhat(centers, x, d=2):
    """Particular solution ``fhat`` with ``Laplace(fhat) = 1 + r`` in dim ``d``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x[..., None, :] - centers, axis=-1)
    if d == 2:
        return r**2 / 4.0 + r**3 / 9.0
    if d == 3:
        return r**2 / 6.0 + r**3 / 12.0
    raise ValueError(f"unsupported dimension {d}")


def rbf_fhat_prime(r, d=2):
    r = np.asarray(r, dtype=float)
    if d == 2:
        return r / 2.0 + r**2 / 3.0
    if d == 3:
        return r / 3.0 + r**2 / 4.0
    raise ValueError(f"unsupported dimension {d}")


def rbf_grad_fhat(center, x, d=2):
    """Gradient of ``fhat`` at ``x`` (radial: ``fhat'(r) (x-c)/r``, 0 at the center)."""
    center = np.asarray(center, dtype=float)
    x = np.asarray(x, dtype=float)
    w = x - center
    r = np.linalg.norm(w, axis=-1)
    safe = np.where(r == 0.0, 1.0, r)
    return np.where(
        (r == 0.0)[..., None], 0.0, (rbf_fhat_prime(r, d) / safe)[..., None] * w
    )


def rbf_normal_deriv(center, y, nu, d=2):
    """``d fhat / d nu`` at a surface point ``y`` with unit normal ``nu``."""
    center = np.asarray(center, dtype=float)
    y = np.asarray(y, dtype=float)
    w = y - center
    r = np.linalg.norm(w, axis=-1)
    if np.any(r == 0.0):
        raise ValueError("normal derivative undefined at the basis center")
    return rbf_fhat_prime(r, d) * np.sum(w * np.asarray(nu), axis=-1) / r


@dataclass(frozen=True)
class RbfBasis:
    """Interior expansion nodes; all strictly inside the domain, distinct."""

    nodes: np.ndarray
    dim: int = 2

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "nodes", nodes)
        if nodes.shape[1] != self.dim:
            raise ValueError(f"nodes have dimension {nodes.shape[1]}, expected {self.dim}")
        d = np.linalg.norm(nodes[:, None, :] - nodes[None, :, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() <= 1e-12:
            raise ValueError("duplicate interior nodes")

    @property
    def size(self):
        return len(self.nodes)


# -- boundary discretization ----------------------------------------------


class BoundaryRule:
    """Uniform-angle boundary tables for half-count ``n`` on one domain."""

    def __init__(self, domain: StarDomain2D, n: int):
        if n < 1:
            raise ValueError("boundary half-count must be >= 1")
        self.domain = domain
        self.n = int(n)
        self.angles = np.arange(2 * n) * np.pi / n
        self.centered = domain.centered(self.angles)
        self.points = self.centered + domain.center
        d1 = domain.curve.first_derivative(self.angles)
        d2 = domain.curve.second_derivative(self.angles)
        self.speeds = np.linalg.norm(d1, axis=-1)
        self.normals = np.stack([d1[..., 1], -d1[..., 0]], axis=-1) / self.speeds[..., None]
        self.curv_nu = np.sum(d2 * self.normals, axis=-1)
        self.mesh_width = float((np.pi / n) * self.speeds.max())

        diff = self.centered[:, None, :] - self.centered[None, :, :]
        dist2 = np.sum(diff * diff, axis=-1)
        diag = np.eye(2 * n, dtype=bool)
        safe = np.where(diag, 1.0, dist2)
        k22 = 2.0 * np.sum(diff * self.normals[None, :, :], axis=-1) * self.speeds[None, :] / safe
        k22[diag] = self.curv_nu / self.speeds
        self.k22 = k22

        # log-rule weights plus the smooth log-ratio correction at the nodes
        dt = self.angles[:, None] - self.angles[None, :]
        sin2 = 4.0 * np.sin(dt / 2.0) ** 2
        ratio = np.where(diag, 1.0, safe / np.where(diag, 1.0, sin2))
        corr = np.where(diag, np.log(self.speeds**2)[None, :] * np.ones((2 * n, 1)), np.log(ratio))
        self.gmat = trig_log_weight_matrix(self.angles, n) + corr / (2 * n)

    def fhat_tables(self, basis: RbfBasis):
        """``fhat`` values and scaled normal derivatives at the nodes, (2n, M)."""
        fhat = rbf_fhat(basis.nodes, self.points, d=2)
        w = self.points[:, None, :] - basis.nodes[None, :, :]
        r = np.linalg.norm(w, axis=-1)
        qhat = (
            rbf_fhat_prime(r, 2)
            * np.sum(w * self.normals[:, None, :], axis=-1)
            / r
            * self.speeds[:, None]
        )
        return fhat, qhat


def dk_interior(rule: BoundaryRule, center, x):
    """Volume potential of ``1 + r_center`` at interior ``x`` via the boundary.

    ``D(x) = int_bdry [Phi d(fhat)/dnu - fhat dPhi/dnu] ds - fhat(x)``,
    discretized with the plain trapezoid (all kernels smooth for interior x).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    basis = RbfBasis(np.atleast_2d(np.asarray(center, dtype=float)))
    vals = _dk_interior_matrix(rule, basis, X)[:, 0]
    return float(vals[0]) if single else vals


def _dk_interior_matrix(rule: BoundaryRule, basis: RbfBasis, X):
    """All ``D_k`` at all points: matrix of shape ``(len(X), M)``."""
    n = rule.n
    fhat, qhat = rule.fhat_tables(basis)
    w = X[:, None, :] - rule.points[None, :, :]
    r2 = np.sum(w * w, axis=-1)
    phi = -0.25 * np.log(r2) / np.pi
    dlayer = np.sum(w * rule.normals[None, :, :], axis=-1) / (2.0 * np.pi * r2)
    h = 2.0 * np.pi / (2 * n)
    return h * (phi @ qhat - (dlayer * rule.speeds[None, :]) @ fhat) - rbf_fhat(
        basis.nodes, X, d=2
    )


def dk_boundary(rule: BoundaryRule, center, t):
    """Boundary trace of the volume potential of ``1 + r_center``.

    Uses the log-kernel split: spectral weights for the ``ln(4 sin^2)`` part,
    trapezoid for the smooth log-ratio and double-layer parts, plus the
    half-jump local term.  ``t`` may be any angle, on the node grid or not.
    """
    t = float(t)
    n = rule.n
    center = np.asarray(center, dtype=float)
    fhat_j = rbf_fhat(center[None, :], rule.points)[:, 0]
    w = rule.points - center
    r = np.linalg.norm(w, axis=-1)
    qhat_j = rbf_fhat_prime(r, 2) * np.sum(w * rule.normals, axis=-1) / r * rule.speeds

    xt_c = rule.domain.centered(t)
    xt = xt_c + rule.domain.center
    dt = t - rule.angles
    dist2 = np.sum((xt_c - rule.centered) ** 2, axis=-1)
    sin2 = 4.0 * np.sin(dt / 2.0) ** 2
    on_node = sin2 < 1e-24
    if np.any(on_node):
        d1 = rule.domain.curve.first_derivative(np.asarray(t))
        corr = np.where(on_node, np.log(np.sum(d1 * d1)), 0.0)
        corr = corr + np.where(on_node, 0.0, np.log(np.where(on_node, 1.0, dist2 / np.where(on_node, 1.0, sin2))))
    else:
        corr = np.log(dist2 / sin2)
    g = trig_log_weights(t, n) + corr / (2 * n)

    diffb = xt_c - rule.centered
    db2 = np.sum(diffb * diffb, axis=-1)
    k22 = np.where(
        on_node,
        0.0,
        2.0 * np.sum(diffb * rule.normals, axis=-1) * rule.speeds / np.where(on_node, 1.0, db2),
    )
    if np.any(on_node):
        d1 = rule.domain.curve.first_derivative(np.asarray(t))
        d2 = rule.domain.curve.second_derivative(np.asarray(t))
        sp = np.sqrt(np.sum(d1 * d1))
        nut = np.array([d1[1], -d1[0]]) / sp
        k22 = np.where(on_node, float(np.dot(d2, nut)) / sp, k22)

    minus_2dk = float(g @ qhat_j + (k22 / (2 * n)) @ fhat_j + rbf_fhat(center[None, :], xt[None, :])[0, 0])
    return -0.5 * minus_2dk


# -- system assembly --------------------------------------------------------


def assemble_drm(problem: ProblemSpec, basis: RbfBasis, n: int):
    """Square system over ``(alpha_1..alpha_M, psi_0..psi_{2n-1})``.

    Interior rows collocate the volume-density equation at the basis nodes
    (identity through the expansion, minus the transformed gradient-coupling
    block, plus the boundary-coupling block); boundary rows collocate the
    trace equation at the boundary angles.
    """
    domain = problem.domain
    if not isinstance(domain, StarDomain2D):
        raise ValueError("this dual reciprocity solver is 2D only")
    if not np.all(domain.contains(basis.nodes)):
        raise ValueError("basis nodes must lie strictly inside the domain")
    rule = BoundaryRule(domain, n)
    M = basis.size
    fhat, qhat = rule.fhat_tables(basis)

    X = basis.nodes
    a = problem.sigma.grad_log_sigma(X)
    w = rule.points[None, :, :] - X[:, None, :]  # y_j - x_m
    r2 = np.sum(w * w, axis=-1)
    wa = np.sum(w * a[:, None, :], axis=-1)
    wnu = np.sum(w * rule.normals[None, :, :], axis=-1)
    anu = a @ rule.normals.T
    gfac = wa / r2                                  # (y-x).a / |y-x|^2
    hfac = anu / r2 - 2.0 * wa * wnu / r2**2        # d/dnu(y) of the same

    # gradient of fhat_k dotted with grad ln sigma at the collocation nodes
    wkk = X[:, None, :] - basis.nodes[None, :, :]
    rkk = np.linalg.norm(wkk, axis=-1)
    safe_r = np.where(rkk == 0.0, 1.0, rkk)
    gradterm = np.where(rkk == 0.0, 0.0, rbf_fhat_prime(rkk, 2) / safe_r * np.sum(wkk * a[:, None, :], axis=-1))

    h = 1.0 / (2 * n)
    dk11 = h * (gfac @ qhat - (hfac * rule.speeds[None, :]) @ fhat) - gradterm

    A = np.zeros((M + 2 * n, M + 2 * n))
    b = np.zeros(M + 2 * n)
    A[:M, :M] = rbf_f(basis.nodes, X) - dk11
    A[:M, M:] = -h * hfac * rule.speeds[None, :]
    b[:M] = problem.source(X) / problem.sigma.sigma(X)

    dk21 = rule.gmat @ qhat + h * (rule.k22 @ fhat) + fhat
    A[M:, :M] = dk21
    A[M:, M:] = np.eye(2 * n) - h * rule.k22
    b[M:] = -2.0 * problem.boundary_data(rule.points)
    return A, b


@dataclass(frozen=True)
class DrmSolution:
    basis: RbfBasis
    alpha: np.ndarray
    psi: np.ndarray
    n: int
    condition: float
    rule: BoundaryRule

    def volume_density(self, x):
        """Reconstruct the scaled volume density ``sum_k alpha_k f_k``."""
        return rbf_f(self.basis.nodes, np.asarray(x, dtype=float)) @ self.alpha


def solve_drm(problem: ProblemSpec, basis: RbfBasis, n: int, estimate_condition=True):
    A, b = assemble_drm(problem, basis, n)
    x = lu_solve(A, b)
    cond = condition_estimate(A) if estimate_condition else np.nan
    return DrmSolution(
        basis=basis,
        alpha=x[: basis.size],
        psi=x[basis.size :],
        n=int(n),
        condition=float(cond),
        rule=BoundaryRule(problem.domain, n),
    )


def eval_drm_solution(sol: DrmSolution, problem: ProblemSpec, x):
    """Field value: transformed volume potential plus double-layer term."""
    single = np.asarray(x, dtype=float).ndim == 1
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    inside = problem.domain.contains(pts)
    if not np.all(inside):
        raise ValueError("evaluation point outside the domain")
    rule = sol.rule
    near = problem.domain.boundary_distance(pts) < rule.mesh_width
    if np.any(near):
        warnings.warn(
            f"{int(near.sum())} evaluation(s) within one boundary mesh width: "
            "accuracy degraded",
            RuntimeWarning,
        )
    dmat = _dk_interior_matrix(rule, sol.basis, pts)
    w = pts[:, None, :] - rule.points[None, :, :]
    r2 = np.sum(w * w, axis=-1)
    dl = np.sum(w * rule.normals[None, :, :], axis=-1) / r2
    vals = dmat @ sol.alpha + (dl * rule.speeds[None, :]) @ sol.psi / (2 * sol.n)
    return float(vals[0]) if single else vals


# -- interior node generation -----------------------------------------------


def lattice_nodes(domain: StarDomain2D, m: int, margin_frac: float = 0.05):
    """Approximately uniform interior nodes: square lattice clipped to the
    domain with a boundary margin, trimmed to exactly ``m`` points.

    The margin is ``margin_frac`` of the domain diameter, realized as the
    polygon offset inward along the boundary normals (exact for smooth
    curves as long as curvature * margin < 1).  When the lattice count
    overshoots, the points closest to the boundary are dropped first,
    deterministically.
    """
    if m < 1:
        raise ValueError("need at least one interior node")
    diam = domain.diameter()
    margin = margin_frac * diam
    tgrid = np.arange(1024) * (2.0 * np.pi / 1024)
    bpts = domain.boundary(tgrid)[0]
    inner = Path(bpts - margin * domain.outward_normal(tgrid))
    box_lo = bpts.min(axis=0)
    box_hi = bpts.max(axis=0)
    center = domain.center

    def lattice(h):
        # cell-centered: keeps nodes off the domain center and symmetry axes
        nx = int(np.ceil((box_hi[0] - box_lo[0]) / h)) + 1
        ny = int(np.ceil((box_hi[1] - box_lo[1]) / h)) + 1
        ii = (np.arange(-nx, nx + 1) + 0.5) * h
        jj = (np.arange(-ny, ny + 1) + 0.5) * h
        gx, gy = np.meshgrid(center[0] + ii, center[1] + jj, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        return pts[inner.contains_points(pts)]

    lo, hi = 0.02 * diam / np.sqrt(m), 1.5 * diam
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
        raise ValueError(f"could not place {m} nodes with margin {margin:.3g}")
    dist = np.linalg.norm(pts[:, None, :] - bpts[None, ::2, :], axis=-1).min(axis=1)
    order = np.argsort(-dist, kind="stable")
    return pts[order[:m]]


def load_nodes(path, dim):
    """Interior nodes from a text file: one point per line, whitespace-split."""
    pts = np.loadtxt(path, dtype=float, ndmin=2)
    if pts.shape[1] != dim:
        raise ValueError(f"node file has {pts.shape[1]} columns, expected {dim}")
    return pts

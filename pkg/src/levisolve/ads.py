"""Adaptive-discretization solver for the coupled density system.

The unknowns are the scaled volume density ``mu`` at the layered interior
nodes and the scaled boundary density ``psi`` at the boundary ring, ordered
layer-major (innermost layer first, angles in index order) with ``psi``
last.  Row ordering matches, so assembly is reproducible bit for bit.

Block structure of the square system:

* interior rows: identity minus the layered volume kernel (its own layer
  split into a continuous part integrated by the trapezoid plus a
  cotangent part handled by the principal-value trigonometric weights;
  other layers are smooth and take the plain trapezoid), plus the
  boundary-coupling block with trapezoidal weights,
* boundary rows: log-kernel volume block with the composite radial
  weights, identity, and the continuous double-layer block.

Collocation radii stop one half-step short of the boundary, which keeps
the boundary-coupling kernel uniformly bounded; the price is a condition
number that grows with the radial count, recorded in the solution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import StarDomain2D
from .kernels import ConductivityField
from .linalg import condition_estimate, lu_solve
from .problems import ProblemSpec
from .quadrature import RadialScheme, trig_cot_weight_matrix

__all__ = ["AdsSolution", "assemble_ads", "solve_ads", "eval_ads_solution"]


@dataclass(frozen=True)
class AdsSolution:
    """Solved densities with the node tables needed for field evaluation."""

    scheme: RadialScheme
    mu: np.ndarray          # flattened layer-major interior density
    psi: np.ndarray         # boundary density at the outer ring angles
    layer_offsets: np.ndarray
    nodes: np.ndarray       # interior quadrature nodes, physical coords
    node_weights: np.ndarray  # cell measures c_k * (2pi/2n_k) * J
    boundary_points: np.ndarray
    boundary_normals: np.ndarray
    boundary_speeds: np.ndarray
    condition: float

    def mu_layer(self, layer):
        """Interior density values on one 0-based layer."""
        lo, hi = self.layer_offsets[layer], self.layer_offsets[layer + 1]
        return self.mu[lo:hi]


class _LayerTables:
    """Precomputed geometry at every scheme node of one domain."""

    def __init__(self, domain: StarDomain2D, sigma: ConductivityField, scheme: RadialScheme):
        self.domain = domain
        self.sigma = sigma
        self.scheme = scheme
        L = scheme.interior_layers
        self.angles = [scheme.angles(k) for k in range(L)]
        self.xi = [scheme.radii[k] for k in range(L)]
        self.centered = [domain.centered(t) for t in self.angles]
        self.points = [c * x + domain.center for c, x in zip(self.xi, self.centered)]
        self.jac = [
            domain.jacobian(np.full(t.shape, xi), t)
            for xi, t in zip(self.xi, self.angles)
        ]

        d1 = [domain.curve.first_derivative(t) for t in self.angles]
        d2 = [domain.curve.second_derivative(t) for t in self.angles]
        self.speed = [np.linalg.norm(v, axis=-1) for v in d1]
        self.nu = [
            np.stack([v[..., 1], -v[..., 0]], axis=-1) / s[..., None]
            for v, s in zip(d1, self.speed)
        ]
        self.tang = [v / s[..., None] for v, s in zip(d1, self.speed)]
        self.curv_nu = [np.sum(a * b, axis=-1) for a, b in zip(d2, self.nu)]
        self.curv_tang = [np.sum(a * b, axis=-1) for a, b in zip(d2, self.tang)]
        self.grad_log = [sigma.grad_log_sigma(p) for p in self.points]
        self.G1 = [np.sum(g * nu, axis=-1) for g, nu in zip(self.grad_log, self.nu)]
        self.G2 = [np.sum(g * th, axis=-1) for g, th in zip(self.grad_log, self.tang)]

        # boundary ring
        bl = L  # index of the outermost refined radius (xi = 1)
        self.b_angles = scheme.angles(bl)
        self.b_centered = domain.centered(self.b_angles)
        self.b_points = self.b_centered + domain.center
        bd1 = domain.curve.first_derivative(self.b_angles)
        bd2 = domain.curve.second_derivative(self.b_angles)
        self.b_speed = np.linalg.norm(bd1, axis=-1)
        self.b_nu = np.stack([bd1[..., 1], -bd1[..., 0]], axis=-1) / self.b_speed[..., None]
        self.b_curv_nu = np.sum(bd2 * self.b_nu, axis=-1)


def _self_layer_block(tab: _LayerTables, k):
    """Split-kernel entries of layer ``k`` against its own nodes."""
    n = int(tab.scheme.counts[k])
    eta = tab.xi[k]
    xc = tab.centered[k]          # (2n, 2) centered boundary curve values
    J = tab.jac[k]
    G1, G2 = tab.G1[k], tab.G2[k]
    speed = tab.speed[k]
    nu, tang = tab.nu[k], tab.tang[k]

    diff = eta * (xc[None, :, :] - xc[:, None, :])   # y - x, same radius
    dist2 = np.sum(diff * diff, axis=-1)
    idx = np.arange(2 * n)
    diag = idx[:, None] == idx[None, :]
    safe = np.where(diag, 1.0, dist2)

    dt = tab.angles[k][None, :] - tab.angles[k][:, None]
    half = np.where(diag, 1.0, np.mod(dt + np.pi, 2.0 * np.pi) - np.pi) / 2.0
    cot = np.cos(half) / np.sin(half)

    kappa1 = np.sum(diff * nu[:, None, :], axis=-1) / safe
    kappa2 = np.sum(diff * tang[:, None, :], axis=-1) / safe - cot / (
        2.0 * eta * speed[:, None]
    )
    smooth = J[None, :] * (G1[:, None] * kappa1 + G2[:, None] * kappa2)
    diag_val = J * (G1 * tab.curv_nu[k] + G2 * tab.curv_tang[k]) / (2.0 * eta * speed**2)
    smooth[diag] = diag_val

    Tmat = trig_cot_weight_matrix(tab.angles[k], n)
    cot_part = (J[None, :] / eta) * (G2[:, None] / (2.0 * speed[:, None])) * Tmat
    return smooth / (2 * n) + cot_part


def _cross_layer_block(tab: _LayerTables, kr, kc):
    """Plain trapezoid entries of collocation layer ``kr`` vs layer ``kc``."""
    n = int(tab.scheme.counts[kc])
    diff = (tab.xi[kc] * tab.centered[kc])[None, :, :] - (
        tab.xi[kr] * tab.centered[kr]
    )[:, None, :]
    dist2 = np.sum(diff * diff, axis=-1)
    dot = np.sum(diff * tab.grad_log[kr][:, None, :], axis=-1)
    return (dot / dist2) * tab.jac[kc][None, :] / (2 * n)


def _boundary_coupling_block(tab: _LayerTables, kr):
    """Trapezoid entries of the boundary density in the interior equation."""
    nb = len(tab.b_angles) // 2
    x = tab.points[kr]
    a = tab.grad_log[kr]
    w = tab.b_points[None, :, :] - x[:, None, :]     # y - x
    r2 = np.sum(w * w, axis=-1)
    wa = np.sum(w * a[:, None, :], axis=-1)
    wnu = np.sum(w * tab.b_nu[None, :, :], axis=-1)
    anu = a @ tab.b_nu.T
    dipole = anu / r2 - 2.0 * wa * wnu / r2**2       # d/dnu(y) [(y-x).a/|y-x|^2]
    # kernel K12 = -dipole * |x'|; enters the equation with + trapezoid weight
    return -dipole * tab.b_speed[None, :] / (2 * nb)


def _k22_matrix(tab: _LayerTables):
    diff = tab.b_centered[:, None, :] - tab.b_centered[None, :, :]
    dist2 = np.sum(diff * diff, axis=-1)
    m = len(tab.b_angles)
    diag = np.eye(m, dtype=bool)
    safe = np.where(diag, 1.0, dist2)
    vals = 2.0 * np.sum(diff * tab.b_nu[None, :, :], axis=-1) * tab.b_speed[None, :] / safe
    vals[diag] = tab.b_curv_nu / tab.b_speed
    return vals


def assemble_ads(problem: ProblemSpec, scheme: RadialScheme):
    """Assemble the square collocation matrix and right-hand side."""
    domain = problem.domain
    if not isinstance(domain, StarDomain2D):
        raise ValueError("layered volume discretization is 2D only")
    tab = _LayerTables(domain, problem.sigma, scheme)
    L = scheme.interior_layers
    sizes = [2 * int(scheme.counts[k]) for k in range(L)]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    n_mu = int(offsets[-1])
    nb = scheme.boundary_node_count()
    total = n_mu + nb

    A = np.zeros((total, total))
    b = np.zeros(total)
    c = scheme.weights

    for kr in range(L):
        rows = slice(offsets[kr], offsets[kr + 1])
        for kc in range(L):
            cols = slice(offsets[kc], offsets[kc + 1])
            if kc == kr:
                block = _self_layer_block(tab, kr)
            else:
                block = _cross_layer_block(tab, kr, kc)
            if not np.all(np.isfinite(block)):
                raise ValueError(f"non-finite volume block (layers {kr}, {kc})")
            A[rows, cols] = -c[kc] * block
        A[rows, n_mu:] = _boundary_coupling_block(tab, kr)
        b[rows] = problem.source(tab.points[kr]) / problem.sigma.sigma(tab.points[kr])
    idx = np.arange(n_mu)
    A[idx, idx] += 1.0

    # boundary collocation rows
    rows = slice(n_mu, total)
    for kc in range(L):
        cols = slice(offsets[kc], offsets[kc + 1])
        n = int(scheme.counts[kc])
        diff = tab.b_centered[:, None, :] - (tab.xi[kc] * tab.centered[kc])[None, :, :]
        dist2 = np.sum(diff * diff, axis=-1)
        A[rows, cols] = (c[kc] / (2 * n)) * np.log(dist2) * tab.jac[kc][None, :]
    A[rows, n_mu:] = -_k22_matrix(tab) / nb  # trapezoid weight 1/(2 n) = 1/nb
    bidx = np.arange(nb)
    A[n_mu + bidx, n_mu + bidx] += 1.0
    b[rows] = -2.0 * problem.boundary_data(tab.b_points)

    if not np.all(np.isfinite(A)):
        raise ValueError("assembled matrix contains non-finite entries")
    return A, b


def solve_ads(problem: ProblemSpec, scheme: RadialScheme, estimate_condition=True):
    """Assemble and solve; returns densities plus evaluation tables."""
    domain = problem.domain
    A, b = assemble_ads(problem, scheme)
    x = lu_solve(A, b)
    cond = condition_estimate(A) if estimate_condition else np.nan

    tab = _LayerTables(domain, problem.sigma, scheme)
    L = scheme.interior_layers
    sizes = [2 * int(scheme.counts[k]) for k in range(L)]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    n_mu = int(offsets[-1])

    nodes = np.concatenate(tab.points, axis=0)
    weights = np.concatenate(
        [
            scheme.weights[k] * (2.0 * np.pi / (2 * int(scheme.counts[k]))) * tab.jac[k]
            for k in range(L)
        ]
    )
    return AdsSolution(
        scheme=scheme,
        mu=x[:n_mu],
        psi=x[n_mu:],
        layer_offsets=offsets,
        nodes=nodes,
        node_weights=weights,
        boundary_points=tab.b_points,
        boundary_normals=tab.b_nu,
        boundary_speeds=tab.b_speed,
        condition=float(cond),
    )


def eval_ads_solution(sol: AdsSolution, problem: ProblemSpec, x, check_domain=True):
    """Evaluate the field from the discretized representation.

    ``x`` may be a single point or an ``(Q, 2)`` batch.  The value is the
    discrete volume potential of ``mu`` plus the double-layer potential of
    ``psi``.  For points falling inside a quadrature node's equivalent-area
    disk the coincident cell is omitted from the sum (its trapezoid weight
    would be singular there; the cell's true contribution vanishes with the
    cell size); such evaluations carry a degraded-accuracy warning.
    """
    single = np.asarray(x, dtype=float).ndim == 1
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if check_domain:
        inside = problem.domain.contains(pts)
        if not np.all(inside):
            raise ValueError("evaluation point outside the domain")

    nb = len(sol.boundary_points) // 2
    rho2 = sol.node_weights / np.pi  # equivalent-disk radius^2 per cell
    out = np.empty(len(pts))
    degraded = 0
    chunk = max(1, int(2e6 // max(len(sol.nodes), 1)))
    for lo in range(0, len(pts), chunk):
        hi = min(lo + chunk, len(pts))
        diff = pts[lo:hi, None, :] - sol.nodes[None, :, :]
        dist2 = np.sum(diff * diff, axis=-1)
        near = dist2 < 0.25 * rho2[None, :]
        degraded += int(near.sum())
        safe = np.where(near, 1.0, dist2)
        phi_w = np.where(near, 0.0, -0.25 * np.log(safe) / np.pi * sol.node_weights[None, :])
        vol = phi_w @ sol.mu

        wb = pts[lo:hi, None, :] - sol.boundary_points[None, :, :]
        r2b = np.sum(wb * wb, axis=-1)
        dl = np.sum(wb * sol.boundary_normals[None, :, :], axis=-1) / r2b
        surf = (dl * sol.boundary_speeds[None, :]) @ sol.psi / (2 * nb)
        out[lo:hi] = vol + surf
    if degraded:
        warnings.warn(
            f"{degraded} evaluation(s) within a quadrature cell: coincident cell "
            "omitted from the volume sum, accuracy degraded",
            RuntimeWarning,
        )
    return float(out[0]) if single else out

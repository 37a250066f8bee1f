import numpy as np
import pytest

from levisolve.drm import (
    BoundaryRule,
    RbfBasis,
    assemble_drm,
    dk_boundary,
    dk_interior,
    eval_drm_solution,
    lattice_nodes,
    load_nodes,
    rbf_f,
    rbf_fhat,
    rbf_fhat_prime,
    rbf_grad_fhat,
    rbf_normal_deriv,
    solve_drm,
)
from levisolve.geometry import circle_domain, heart_domain
from levisolve.kernels import constant_conductivity
from levisolve.problems import ProblemSpec, heart_problem
from levisolve.quadrature import brute_volume_potential


def test_rbf_values():
    c = np.array([[0.3, -0.2]])
    assert np.isclose(rbf_f(c, np.array([0.3, -0.2]))[0], 1.0)
    assert np.isclose(rbf_fhat(c, np.array([0.3, -0.2]))[0], 0.0)
    x = np.array([1.3, -0.2])  # r = 1
    assert np.isclose(rbf_fhat(c, x, d=2)[0], 13.0 / 36.0)
    c3 = np.array([[0.3, -0.2, 0.0]])
    assert np.isclose(rbf_fhat(c3, np.array([1.3, -0.2, 0.0]), d=3)[0], 1.0 / 4.0)


@pytest.mark.parametrize("d", [2, 3])
def test_fhat_laplacian_identity(d):
    # five/seven-point stencil Laplacian of fhat equals 1 + r
    rng = np.random.default_rng(d)
    c = rng.normal(size=d)
    h = 1e-4
    for _ in range(5):
        x = c + rng.uniform(0.3, 1.5) * rng.normal(size=d) / np.sqrt(d)
        lap = 0.0
        f0 = rbf_fhat(c[None, :], x, d=d)[0]
        for ax in range(d):
            e = np.zeros(d)
            e[ax] = h
            lap += (
                rbf_fhat(c[None, :], x + e, d=d)[0]
                - 2 * f0
                + rbf_fhat(c[None, :], x - e, d=d)[0]
            ) / h**2
        r = np.linalg.norm(x - c)
        assert abs(lap - (1.0 + r)) < 1e-5


def test_grad_fhat():
    c = np.array([0.1, 0.2])
    h = 0.05
    g = rbf_grad_fhat(c, c + np.array([h, 0.0]))
    assert np.allclose(g, [rbf_fhat_prime(h), 0.0])
    assert np.allclose(rbf_grad_fhat(c, c), [0.0, 0.0])
    # finite-difference agreement at a generic point
    x = np.array([0.7, -0.4])
    eps = 1e-6
    for ax in range(2):
        e = np.zeros(2)
        e[ax] = eps
        fd = (rbf_fhat(c[None], x + e)[0] - rbf_fhat(c[None], x - e)[0]) / (2 * eps)
        assert abs(rbf_grad_fhat(c, x)[ax] - fd) < 1e-6


def test_normal_derivative_disk():
    # unit disk, center 0: d(fhat)/dnu on the boundary is fhat'(1) = 5/6
    y = np.array([np.cos(0.7), np.sin(0.7)])
    v = rbf_normal_deriv(np.zeros(2), y, y)
    assert np.isclose(v, 5.0 / 6.0)
    with pytest.raises(ValueError):
        rbf_normal_deriv(y, y, y)


def test_dk_interior_disk_center():
    rule = BoundaryRule(circle_domain(), 64)
    assert np.isclose(dk_interior(rule, [0.0, 0.0], [0.0, 0.0]), 13.0 / 36.0, atol=1e-12)


def test_dk_interior_matches_volume_oracle_heart():
    dom = heart_domain()
    rule = BoundaryRule(dom, 256)
    rng = np.random.default_rng(7)
    base = np.array([0.52, 1.02])
    for _ in range(5):
        c = base + rng.uniform(-0.05, 0.05, 2)
        x = base + rng.uniform(-0.08, 0.08, 2)
        got = dk_interior(rule, c, x)
        want = brute_volume_potential(dom, lambda p: 1 + np.linalg.norm(p - c, axis=-1), x)
        assert abs(got - want) <= 1e-6


def test_dk_translation_invariance():
    r1 = BoundaryRule(circle_domain(center=(0, 0)), 32)
    r2 = BoundaryRule(circle_domain(center=(3, -2)), 32)
    v1 = dk_interior(r1, [0.2, 0.1], [0.4, -0.3])
    v2 = dk_interior(r2, [3.2, -1.9], [3.4, -2.3])
    assert np.isclose(v1, v2, atol=1e-14)


def test_dk_boundary_disk_zero():
    rule = BoundaryRule(circle_domain(), 64)
    assert abs(dk_boundary(rule, [0.0, 0.0], 0.3)) < 1e-12
    assert abs(dk_boundary(rule, [0.0, 0.0], rule.angles[5])) < 1e-12


def test_dk_boundary_refinement_stable():
    # spectral log rule: doubling n changes the disk value below 1e-8
    c = [0.25, -0.1]
    v1 = dk_boundary(BoundaryRule(circle_domain(), 64), c, 1.1)
    v2 = dk_boundary(BoundaryRule(circle_domain(), 128), c, 1.1)
    assert abs(v1 - v2) < 1e-8


def test_dk_boundary_interior_continuity():
    # the transformed volume potential is continuous up to the boundary; at
    # a 1e-6 relative offset the discrete gap is dominated by the interior
    # rule's near-boundary trapezoid degradation and plateaus at the 1e-3
    # scale regardless of n (the offset sits far below any practical mesh)
    dom = heart_domain()
    rule = BoundaryRule(dom, 256)
    c = np.array([0.52, 1.02])
    for t in (0.41, 1.234, 3.3):
        xb = dom.boundary(t)[0]
        x_in = dom.center + (xb - dom.center) * (1 - 1e-6)
        gap = abs(dk_boundary(rule, c, t) - dk_interior(rule, c, x_in))
        assert gap <= 2e-2


def test_assemble_sizes():
    prob = heart_problem()
    basis = RbfBasis(lattice_nodes(prob.domain, 196))
    A, b = assemble_drm(prob, basis, 256)
    assert A.shape == (708, 708) and b.shape == (708,)


def test_constant_sigma_rows_decouple():
    prob = ProblemSpec(
        domain=circle_domain(),
        sigma=constant_conductivity(2.0, 2),
        source=lambda p: np.ones(p.shape[:-1]),
        boundary_data=lambda p: np.zeros(p.shape[:-1]),
    )
    basis = RbfBasis(lattice_nodes(prob.domain, 12))
    A, _ = assemble_drm(prob, basis, 16)
    M = basis.size
    assert np.allclose(A[:M, M:], 0.0)
    assert np.allclose(A[:M, :M], rbf_f(basis.nodes, basis.nodes))


def test_interpolation_recovery():
    # sigma constant and F/sigma in span{f_k}: alpha recovers the coefficients
    dom = circle_domain()
    nodes = lattice_nodes(dom, 15)
    basis = RbfBasis(nodes)
    rng = np.random.default_rng(9)
    coef = rng.normal(size=basis.size)

    def F(p):
        return rbf_f(nodes, p) @ coef

    prob = ProblemSpec(
        domain=dom,
        sigma=constant_conductivity(1.0, 2),
        source=F,
        boundary_data=lambda p: np.zeros(p.shape[:-1]),
    )
    sol = solve_drm(prob, basis, 32, estimate_condition=False)
    assert np.abs(sol.alpha - coef).max() < 1e-8
    assert np.allclose(sol.volume_density(nodes), F(nodes), atol=1e-7)


def test_constant_sigma_harmonic_reduction():
    u = lambda p: p[..., 0] ** 2 - p[..., 1] ** 2 + 2.0
    prob = ProblemSpec(
        domain=circle_domain(1.0, (0.2, 0.1)),
        sigma=constant_conductivity(2.0, 2),
        source=lambda p: np.zeros(p.shape[:-1]),
        boundary_data=u,
        exact_solution=u,
    )
    basis = RbfBasis(lattice_nodes(prob.domain, 25))
    sol = solve_drm(prob, basis, 64, estimate_condition=False)
    pts = np.array([[0.2, 0.1], [0.5, 0.3], [-0.2, -0.3], [0.2, 0.6]])
    assert np.abs(eval_drm_solution(sol, prob, pts) - u(pts)).max() <= 1e-6
    assert np.abs(sol.alpha).max() <= 1e-10


def test_solution_evaluable_at_basis_nodes():
    prob = heart_problem()
    basis = RbfBasis(lattice_nodes(prob.domain, 20))
    sol = solve_drm(prob, basis, 64, estimate_condition=False)
    vals = eval_drm_solution(sol, prob, basis.nodes)
    assert np.all(np.isfinite(vals))


def test_eval_outside_rejected_and_near_boundary_warns():
    prob = heart_problem()
    basis = RbfBasis(lattice_nodes(prob.domain, 12))
    sol = solve_drm(prob, basis, 32, estimate_condition=False)
    with pytest.raises(ValueError):
        eval_drm_solution(sol, prob, np.array([9.0, 9.0]))
    xb = prob.domain.boundary(0.3)[0]
    near = prob.domain.center + (xb - prob.domain.center) * 0.999
    with pytest.warns(RuntimeWarning, match="mesh width"):
        eval_drm_solution(sol, prob, near)


def test_duplicate_and_outside_nodes_rejected():
    prob = heart_problem()
    with pytest.raises(ValueError, match="duplicate"):
        RbfBasis(np.array([[0.5, 1.0], [0.5, 1.0]]))
    with pytest.raises(ValueError, match="inside"):
        assemble_drm(prob, RbfBasis(np.array([[5.0, 5.0]])), 16)


def test_lattice_nodes_properties():
    dom = heart_domain()
    for m in (9, 41, 196):
        pts = lattice_nodes(dom, m)
        assert len(pts) == m
        assert np.all(dom.contains(pts))
        # margin realized via the offset polygon; allow its sampling slack
        assert dom.boundary_distance(pts).min() >= 0.99 * 0.05 * dom.diameter()
    assert np.allclose(lattice_nodes(dom, 30), lattice_nodes(dom, 30))


def test_load_nodes(tmp_path):
    f = tmp_path / "nodes.txt"
    f.write_text("0.5 1.0\n0.52 1.1\n")
    pts = load_nodes(f, 2)
    assert pts.shape == (2, 2)
    with pytest.raises(ValueError):
        load_nodes(f, 3)

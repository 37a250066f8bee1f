import numpy as np
import pytest

from levisolve.problems import (
    ellipse_problem,
    get_problem,
    heart_problem,
    manufactured_residual,
    pinched_ball_problem,
    register_problem,
)


def interior_points_2d(problem, count, seed=0):
    rng = np.random.default_rng(seed)
    dom = problem.domain
    pts = []
    while len(pts) < count:
        t = rng.uniform(0, 2 * np.pi)
        eta = rng.uniform(0.05, 0.92)
        pts.append(dom.map(eta, t))
    return np.array(pts)


def interior_points_3d(problem, count, seed=0):
    rng = np.random.default_rng(seed)
    surf = problem.domain
    pts = []
    while len(pts) < count:
        p = rng.uniform(-1.6, 1.6, 3)
        if surf.contains(p[None, :], shrink=0.1)[0]:
            pts.append(p)
    return np.array(pts)


@pytest.mark.parametrize("factory", [heart_problem, ellipse_problem])
def test_manufactured_residual_2d(factory):
    prob = factory()
    pts = interior_points_2d(prob, 100)
    res = manufactured_residual(prob, pts)
    assert np.max(np.abs(res)) < 1e-9


def test_manufactured_residual_3d():
    prob = pinched_ball_problem()
    pts = interior_points_3d(prob, 100)
    res = manufactured_residual(prob, pts)
    assert np.max(np.abs(res)) < 1e-9


def test_reference_values():
    prob = heart_problem()
    assert np.isclose(prob.exact_solution(np.array([0.5, 1.0])), 1.25)
    assert np.isclose(prob.sigma.sigma(np.array([0.0, 0.0])), 2.2)
    p3 = pinched_ball_problem()
    assert np.isclose(p3.sigma.sigma(np.zeros(3)), 2.0)
    assert np.isclose(p3.exact_solution(np.zeros(3)), 1.0)


def test_boundary_data_agrees_with_exact():
    for prob in (heart_problem(), ellipse_problem()):
        t = np.linspace(0, 2 * np.pi, 40, endpoint=False)
        y = prob.domain.boundary(t)[0]
        assert np.allclose(prob.boundary_data(y), prob.exact_solution(y))


def test_sigma_positivity_2d():
    prob = heart_problem()
    pts = interior_points_2d(prob, 300, seed=3)
    assert prob.sigma.sigma(pts).min() > 0


def test_sigma_sign_change_3d():
    # the published 3D benchmark's conductivity is NOT uniformly positive on
    # the pinched ball: it crosses zero in a pocket near the -y2 extremity.
    # Interior expansion nodes must avoid that pocket (the solvers sample
    # sigma only there); the node generator used by the bench runner does.
    prob = pinched_ball_problem()
    bad = np.array([[0.0, -1.2, 0.0]])
    assert prob.domain.contains(bad, shrink=0.1)[0]
    assert prob.sigma.sigma(bad)[0] < 0

    from levisolve.bench import SIGMA_NODE_FLOOR, _resolve_nodes_3d

    nodes = _resolve_nodes_3d(prob, 136)
    assert prob.sigma.sigma(nodes).min() >= SIGMA_NODE_FLOOR


def test_grad_log_sigma_consistency():
    for prob in (heart_problem(), pinched_ball_problem()):
        pts = (
            interior_points_2d(prob, 50)
            if prob.dimension == 2
            else interior_points_3d(prob, 50)
        )
        g = prob.sigma.grad_log_sigma(pts)
        s = prob.sigma.sigma(pts)
        assert np.allclose(g * s[..., None], prob.sigma.grad_sigma(pts), atol=1e-10)


def test_problem_registry():
    assert get_problem("heart").name == "heart"
    with pytest.raises(KeyError):
        get_problem("does_not_exist")
    register_problem("heart_alias", heart_problem)
    assert get_problem("heart_alias").name == "heart"

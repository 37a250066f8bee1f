import numpy as np
import pytest

from levisolve.linalg import SingularSystemError, condition_estimate, lu_solve


def test_identity():
    b = np.array([3.0, -1.0, 2.5])
    assert np.allclose(lu_solve(np.eye(3), b), b)


def test_diagonal():
    A = np.diag([2.0, 4.0])
    assert np.allclose(lu_solve(A, np.array([2.0, 8.0])), [1.0, 2.0])


def test_random_roundtrip():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(50, 50)) + 50 * np.eye(50)
    x = rng.normal(size=50)
    got = lu_solve(A, A @ x)
    assert np.linalg.norm(got - x) / np.linalg.norm(x) < 1e-10


def test_singular_raises():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularSystemError):
        lu_solve(A, np.array([1.0, 1.0]))


def test_shape_validation():
    with pytest.raises(ValueError):
        lu_solve(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        lu_solve(np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        lu_solve(np.array([[np.nan, 0.0], [0.0, 1.0]]), np.ones(2))


def test_condition_estimates():
    assert np.isclose(condition_estimate(np.eye(4)), 1.0)
    assert np.isclose(condition_estimate(np.diag([1.0, 1000.0])), 1000.0)
    # random orthogonal-like matrix stays well conditioned; compare against
    # the exact 1-norm condition number as the oracle
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.normal(size=(50, 50)))
    est = condition_estimate(Q)
    exact = np.linalg.cond(Q, 1)
    assert est <= 10 * exact and est >= exact / 10
    assert est < 200
    assert condition_estimate(np.zeros((3, 3))) == np.inf

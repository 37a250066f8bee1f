"""Boundary value problems: data container and the built-in benchmark set.

A problem bundles the domain, the conductivity (with analytic gradient),
the source, the Dirichlet data, and optionally an exact solution for
benchmarking.  Custom problems are registered in code by name; the CLI
only ever references registry names, since conductivities need analytic
gradients that a config file cannot express.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .geometry import (
    StarDomain2D,
    SurfacePatch3D,
    ellipse_domain,
    heart_domain,
    pinched_ball_surface,
)
from .kernels import ConductivityField

__all__ = [
    "ProblemSpec",
    "heart_problem",
    "ellipse_problem",
    "pinched_ball_problem",
    "get_problem",
    "register_problem",
    "manufactured_residual",
]


@dataclass(frozen=True)
class ProblemSpec:
    """Dirichlet problem ``-div(sigma grad u) = F``, ``u = f`` on the boundary."""

    domain: Union[StarDomain2D, SurfacePatch3D]
    sigma: ConductivityField
    source: Callable[[np.ndarray], np.ndarray]
    boundary_data: Callable[[np.ndarray], np.ndarray]
    exact_solution: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"

    @property
    def dimension(self):
        return 2 if isinstance(self.domain, StarDomain2D) else 3


def _oscillatory_sigma_2d():
    def sigma(p):
        p = np.asarray(p, dtype=float)
        return 2.0 + 0.2 * np.sin(25.0 * p[..., 0]) + 0.2 * np.cos(25.0 * p[..., 1])

    def grad_sigma(p):
        p = np.asarray(p, dtype=float)
        return np.stack(
            [5.0 * np.cos(25.0 * p[..., 0]), -5.0 * np.sin(25.0 * p[..., 1])], axis=-1
        )

    return ConductivityField(sigma, grad_sigma)


def _quadratic_solution_2d():
    def u(p):
        p = np.asarray(p, dtype=float)
        return p[..., 0] ** 2 - 2.0 * p[..., 1] + 3.0

    return u


def _source_2d():
    def F(p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        return -10.0 * (x * np.cos(25.0 * x) + np.sin(25.0 * y)) - (
            4.0 + 0.4 * np.sin(25.0 * x) + 0.4 * np.cos(25.0 * y)
        )

    return F


def heart_problem():
    """Heart-shaped 2D benchmark with oscillatory conductivity."""
    u = _quadratic_solution_2d()
    return ProblemSpec(
        domain=heart_domain(center=(0.5, 1.0)),
        sigma=_oscillatory_sigma_2d(),
        source=_source_2d(),
        boundary_data=u,
        exact_solution=u,
        name="heart",
    )


def ellipse_problem():
    """Elliptical 2D benchmark with the same data as the heart case."""
    u = _quadratic_solution_2d()
    return ProblemSpec(
        domain=ellipse_domain(a=1.0, b=0.5, center=(0.5, 1.0)),
        sigma=_oscillatory_sigma_2d(),
        source=_source_2d(),
        boundary_data=u,
        exact_solution=u,
        name="ellipse",
    )


def pinched_ball_problem():
    """Pinched-ball 3D benchmark with polynomial conductivity."""

    def sigma(p):
        p = np.asarray(p, dtype=float)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        return x**2 * y + 2.0 * (y + z**2) + 2.0

    def grad_sigma(p):
        p = np.asarray(p, dtype=float)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        return np.stack([2.0 * x * y, x**2 + 2.0, 4.0 * z], axis=-1)

    def F(p):
        p = np.asarray(p, dtype=float)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        return (
            -(6.0 * y + 2.0 * z) * x**2
            - 8.0 * y * z
            - 4.0 * y
            - 20.0 * z
            - 4.0 * z**2
            - 4.0
        )

    def u(p):
        p = np.asarray(p, dtype=float)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        return x**2 + 2.0 * (y + 2.0) * z + 1.0

    return ProblemSpec(
        domain=pinched_ball_surface(),
        sigma=ConductivityField(sigma, grad_sigma),
        source=F,
        boundary_data=u,
        exact_solution=u,
        name="pinched_ball",
    )


_REGISTRY: dict[str, Callable[[], ProblemSpec]] = {
    "heart": heart_problem,
    "ellipse": ellipse_problem,
    "pinched_ball": pinched_ball_problem,
}


def register_problem(name: str, factory: Callable[[], ProblemSpec]):
    """Register a problem factory under a CLI-visible name."""
    _REGISTRY[str(name)] = factory


def get_problem(name: str) -> ProblemSpec:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; registered: {sorted(_REGISTRY)}"
        ) from None


def available_problems():
    return sorted(_REGISTRY)


def manufactured_residual(problem: ProblemSpec, points, h=1e-2):
    """``-div(sigma grad u_ex) - F`` at the given points, via central stencils.

    The gradient and Laplacian of the exact solution are formed with
    second-order central differences of step ``h`` (exact on quadratics, so
    the default step keeps round-off ~1e-10 on the built-in benchmarks);
    sigma and its gradient enter analytically.
    """
    if problem.exact_solution is None:
        raise ValueError("problem has no exact solution to check")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts.shape[1]
    u = problem.exact_solution
    grad = np.zeros_like(pts)
    lap = np.zeros(len(pts))
    u0 = u(pts)
    for axis in range(d):
        dp = np.zeros(d)
        dp[axis] = h
        up, um = u(pts + dp), u(pts - dp)
        grad[:, axis] = (up - um) / (2.0 * h)
        lap += (up - 2.0 * u0 + um) / h**2
    div = np.sum(problem.sigma.grad_sigma(pts) * grad, axis=-1) + problem.sigma.sigma(pts) * lap
    return -div - problem.source(pts)

"""Integral-equation solvers for ``-div(sigma grad u) = F`` with Dirichlet
data on star-shaped domains, built on a parametrix (Levi function)
representation: volume potential of a scaled density plus a double-layer
potential, closed by a second-kind boundary equation.

Two interchangeable discretizations:

* :mod:`levisolve.ads` -- layered volume quadrature with per-layer angular
  refinement (2D),
* :mod:`levisolve.drm` / :mod:`levisolve.drm3d` -- dual reciprocity: the
  volume density expanded in radial basis functions so only boundary
  integrals remain (2D and 3D).

Set ``LEVI_THREADS`` before first import to cap the BLAS thread pool used
by assembly and the dense solves.
"""

import os as _os

if "LEVI_THREADS" in _os.environ:
    # must happen before numpy spins up its thread pools
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["LEVI_THREADS"])

from .ads import AdsSolution, assemble_ads, eval_ads_solution, solve_ads
from .bench import ErrorReport, run_experiment, run_preset
from .drm import (
    DrmSolution,
    RbfBasis,
    assemble_drm,
    eval_drm_solution,
    lattice_nodes,
    solve_drm,
)
from .drm3d import (
    Drm3dSolution,
    SphereGrid,
    assemble_drm3d,
    eval_drm3d_solution,
    lattice_nodes_3d,
    solve_drm3d,
    sphere_grid,
)
from .geometry import (
    ParametricCurve2D,
    StarDomain2D,
    SurfacePatch3D,
    circle_domain,
    ellipse_domain,
    heart_domain,
    pinched_ball_surface,
    sphere_surface,
)
from .kernels import ConductivityField, constant_conductivity
from .problems import (
    ProblemSpec,
    ellipse_problem,
    get_problem,
    heart_problem,
    pinched_ball_problem,
    register_problem,
)
from .quadrature import RadialScheme, adaptive_layers, gauss_legendre

__version__ = "0.1.0"

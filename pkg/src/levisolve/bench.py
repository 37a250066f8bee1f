"""Benchmark harness: error metrics, experiment runner, and table presets.

Error conventions:

* layered runs report per-layer relative L2 errors on the layer curves
  (arc-length weighted at the layer's own nodes) and the volume-weighted
  aggregate over all interior layers,
* mesh-free runs report the mean absolute error and the root-mean-square
  relative error over the evaluation set (internal nodes in 2D, three
  axis-orthogonal slice lattices in 3D).

Wall time covers assembly plus solve only, so timings compare methods
rather than problem construction.  Reports serialize to JSON (full config
echo included) and the per-point values to CSV with fixed formatting, so
identical configs give byte-identical CSV output.
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .ads import eval_ads_solution, solve_ads
from .drm import RbfBasis, eval_drm_solution, lattice_nodes, load_nodes, solve_drm
from .drm3d import eval_drm3d_solution, lattice_nodes_3d, solve_drm3d, sphere_grid
from .problems import ProblemSpec, get_problem
from .quadrature import adaptive_layers

__all__ = [
    "ErrorReport",
    "err_local",
    "err_avg",
    "err_mean_abs",
    "err_rms_rel",
    "run_experiment",
    "run_preset",
    "PRESETS",
    "report_to_json",
    "report_from_json",
    "points_to_csv",
]

# conductivity floor for interior-node placement; the 3D benchmark's
# conductivity changes sign inside the pinched ball, and the interior
# collocation needs 1/sigma and grad(ln sigma) bounded at the nodes
SIGMA_NODE_FLOOR = 0.5

# relative radial clearance of the 3D slice evaluation lattices; closer to
# the surface the smooth-rule field evaluation at desk-scale polar counts
# is dominated by near-boundary quadrature noise
SLICE_SHRINK = 0.15


@dataclass
class ErrorReport:
    """Error metrics and run metadata of one solve."""

    problem: str
    method: str
    err_local: dict[int, float] = field(default_factory=dict)
    err_avg: Optional[float] = None
    err_mean_abs: Optional[float] = None
    err_rms_rel: Optional[float] = None
    node_counts: dict[str, int] = field(default_factory=dict)
    wall_time: float = 0.0
    condition: float = float("nan")
    config: dict = field(default_factory=dict)


# -- metrics -----------------------------------------------------------------


def err_mean_abs(values, exact):
    """Mean absolute deviation ``(1/J) sum |u - u_ex|``."""
    values = np.asarray(values, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if values.shape != exact.shape:
        raise ValueError("value arrays must have equal length")
    return float(np.abs(values - exact).mean())


def err_rms_rel(values, exact):
    """Root-mean-square relative error ``sqrt(sum|u-u_ex|^2 / sum|u_ex|^2)``."""
    values = np.asarray(values, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if values.shape != exact.shape:
        raise ValueError("value arrays must have equal length")
    denom = float(np.sum(exact**2))
    if denom == 0.0:
        raise ValueError("exact values identically zero; relative error undefined")
    return float(np.sqrt(np.sum((values - exact) ** 2) / denom))


def _ads_layer_values(sol, problem):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        u = eval_ads_solution(sol, problem, sol.nodes, check_domain=False)
    return u, problem.exact_solution(sol.nodes)


def err_local(sol, problem: ProblemSpec, layer: int, values=None):
    """Relative L2 error on one layer curve, arc-length weighted at its nodes.

    ``layer`` is 1-based, matching the layer-curve family indexing.
    """
    if problem.exact_solution is None:
        raise ValueError("problem has no exact solution to compare against")
    scheme = sol.scheme
    if not 1 <= layer <= scheme.interior_layers:
        raise ValueError(f"layer must be in 1..{scheme.interior_layers}")
    k = layer - 1
    u, uex = values if values is not None else _ads_layer_values(sol, problem)
    lo, hi = sol.layer_offsets[k], sol.layer_offsets[k + 1]
    t = scheme.angles(k)
    speed = np.linalg.norm(problem.domain.curve.first_derivative(t), axis=-1)
    w = scheme.radii[k] * speed
    num = np.sum(w * (u[lo:hi] - uex[lo:hi]) ** 2)
    den = np.sum(w * uex[lo:hi] ** 2)
    return float(np.sqrt(num / den))


def err_avg(sol, problem: ProblemSpec, values=None):
    """Volume-weighted relative L2 error over all interior layers."""
    if problem.exact_solution is None:
        raise ValueError("problem has no exact solution to compare against")
    scheme = sol.scheme
    u, uex = values if values is not None else _ads_layer_values(sol, problem)
    num = den = 0.0
    for k in range(scheme.interior_layers):
        lo, hi = sol.layer_offsets[k], sol.layer_offsets[k + 1]
        n = int(scheme.counts[k])
        c = scheme.weights[k]
        J = sol.node_weights[lo:hi] / (c * 2.0 * np.pi / (2 * n))
        w = (c / n) * J
        num += np.sum(w * (u[lo:hi] - uex[lo:hi]) ** 2)
        den += np.sum(w * uex[lo:hi] ** 2)
    return float(np.sqrt(num / den))


# -- evaluation sets ---------------------------------------------------------


def _slice_lattices(surface, grid_points=25, shrink=SLICE_SHRINK):
    """Three axis-orthogonal slice lattices clipped inside the surface."""
    tg = np.linspace(0.0, np.pi, 64)
    pg = np.linspace(0.0, 2.0 * np.pi, 128, endpoint=False)
    TH, PH = np.meshgrid(tg, pg, indexing="ij")
    rmax = float(surface.radius(TH, PH).max())
    gr = np.linspace(-rmax, rmax, grid_points)
    pts = []
    for ax in range(3):
        gx, gy = np.meshgrid(gr, gr, indexing="ij")
        p = np.zeros((gx.size, 3))
        cols = [c for c in range(3) if c != ax]
        p[:, cols[0]] = gx.ravel()
        p[:, cols[1]] = gy.ravel()
        pts.append(p[surface.contains(p, shrink=shrink)])
    return np.concatenate(pts)


def _resolve_nodes_2d(problem, spec_value):
    if isinstance(spec_value, str):
        if not spec_value.startswith("file:"):
            raise ValueError("internal_nodes must be a count or 'file:<path>'")
        return load_nodes(spec_value[5:], 2)
    return lattice_nodes(problem.domain, int(spec_value))


def _resolve_nodes_3d(problem, spec_value):
    if isinstance(spec_value, str):
        if not spec_value.startswith("file:"):
            raise ValueError("internal_nodes must be a count or 'file:<path>'")
        return load_nodes(spec_value[5:], 3)
    keep = lambda p: problem.sigma.sigma(p) >= SIGMA_NODE_FLOOR
    return lattice_nodes_3d(problem.domain, int(spec_value), keep=keep)


# -- experiment runner --------------------------------------------------------


def run_experiment(config) -> tuple[ErrorReport, np.ndarray]:
    """Solve one configured problem and measure errors.

    ``config`` may be a :class:`~levisolve.cli.RunConfig` or a plain dict
    with the same keys.  Returns the report plus the per-point evaluation
    table ``(coords..., u_num, u_ex, abs_err)`` used for CSV output.
    """
    cfg = config if isinstance(config, dict) else config.as_dict()
    problem = get_problem(cfg["problem"])
    method = cfg["method"]

    if method == "ads":
        scheme = adaptive_layers(int(cfg.get("N", 10)), int(cfg.get("k1", 3)))
        t0 = time.perf_counter()
        sol = solve_ads(problem, scheme)
        wall = time.perf_counter() - t0
        values = _ads_layer_values(sol, problem)
        u, uex = values
        report = ErrorReport(
            problem=problem.name,
            method="ads",
            err_local={
                i: err_local(sol, problem, i, values=values)
                for i in range(1, scheme.interior_layers + 1)
            },
            err_avg=err_avg(sol, problem, values=values),
            err_mean_abs=err_mean_abs(u, uex),
            err_rms_rel=err_rms_rel(u, uex),
            node_counts={
                "unknowns": len(sol.mu) + len(sol.psi),
                "interior": len(sol.mu),
                "boundary": len(sol.psi),
            },
            wall_time=wall,
            condition=sol.condition,
            config=dict(cfg),
        )
        pts = sol.nodes
    elif method == "drm":
        n = int(cfg.get("boundary_n", 256))
        nodes = _resolve_nodes_2d(problem, cfg.get("internal_nodes", 200))
        basis = RbfBasis(nodes)
        t0 = time.perf_counter()
        sol = solve_drm(problem, basis, n)
        wall = time.perf_counter() - t0
        pts = basis.nodes
        u = eval_drm_solution(sol, problem, pts)
        uex = problem.exact_solution(pts)
        report = ErrorReport(
            problem=problem.name,
            method="drm",
            err_mean_abs=err_mean_abs(u, uex),
            err_rms_rel=err_rms_rel(u, uex),
            node_counts={
                "unknowns": basis.size + 2 * n,
                "interior": basis.size,
                "boundary": 2 * n,
            },
            wall_time=wall,
            condition=sol.condition,
            config=dict(cfg),
        )
    elif method == "drm3d":
        N = int(cfg.get("sphere_n", 16))
        nodes = _resolve_nodes_3d(problem, cfg.get("internal_nodes", 136))
        basis = RbfBasis(nodes, dim=3)
        grid = sphere_grid(problem.domain, N)
        t0 = time.perf_counter()
        sol = solve_drm3d(problem, basis, grid)
        wall = time.perf_counter() - t0
        pts = _slice_lattices(problem.domain, int(cfg.get("eval_grid", 25)))
        u = eval_drm3d_solution(sol, problem, pts)
        uex = problem.exact_solution(pts)
        report = ErrorReport(
            problem=problem.name,
            method="drm3d",
            err_mean_abs=err_mean_abs(u, uex),
            err_rms_rel=err_rms_rel(u, uex),
            node_counts={
                "unknowns": basis.size + grid.size,
                "interior": basis.size,
                "boundary": grid.size,
            },
            wall_time=wall,
            condition=sol.condition,
            config=dict(cfg),
        )
    else:
        raise ValueError(f"unknown method {method!r}")

    if method == "ads":
        uex = problem.exact_solution(pts)
    table = np.column_stack([pts, u, uex, np.abs(u - uex)])
    return report, table


# -- table presets ------------------------------------------------------------

PRESETS = {
    "table2": [
        {"problem": "heart", "method": "ads", "N": 10, "k1": k} for k in (1, 2, 3)
    ],
    "table3": [
        {"problem": "ellipse", "method": "ads", "N": 10, "k1": k} for k in (1, 2, 3)
    ],
    "table4drm": [
        {"problem": "heart", "method": "drm", "boundary_n": 256, "internal_nodes": 196}
    ],
    "table5drm": [
        {"problem": "ellipse", "method": "drm", "boundary_n": 256, "internal_nodes": 208}
    ],
    "table6": [
        {"problem": "heart", "method": "drm", "boundary_n": 256, "internal_nodes": m}
        for m in (9, 14, 21, 30, 41)
    ],
    "table7": [
        {"problem": "ellipse", "method": "drm", "boundary_n": 256, "internal_nodes": m}
        for m in (9, 16, 21, 32, 45)
    ],
    "table8": [
        {"problem": "pinched_ball", "method": "drm3d", "sphere_n": 16, "internal_nodes": m}
        for m in (15, 27, 79, 136)
    ],
    "table8full": [
        {"problem": "pinched_ball", "method": "drm3d", "sphere_n": n, "internal_nodes": m}
        for n in (16, 32)
        for m in (15, 27, 79, 136)
    ],
}


def run_preset(name, jobs=1):
    """Run all configurations of one preset; yields (report, table) pairs.

    ``jobs > 1`` runs independent configurations concurrently (thread pool;
    the heavy work is in BLAS and releases the GIL).  Result order matches
    the preset definition either way.
    """
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; valid: {sorted(PRESETS)}")
    configs = [dict(cfg) for cfg in PRESETS[name]]
    if jobs <= 1:
        for cfg in configs:
            yield run_experiment(cfg)
        return
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
        yield from pool.map(run_experiment, configs)


# -- serialization -------------------------------------------------------------


def report_to_json(report: ErrorReport) -> str:
    payload = asdict(report)
    payload["err_local"] = {str(k): v for k, v in report.err_local.items()}
    return json.dumps(payload, indent=2, sort_keys=True)


def report_from_json(text: str) -> ErrorReport:
    payload = json.loads(text)
    payload["err_local"] = {int(k): v for k, v in payload.get("err_local", {}).items()}
    return ErrorReport(**payload)


def points_to_csv(table: np.ndarray) -> str:
    """CSV with '.' decimals, ',' separators, 9 significant digits."""
    dim = table.shape[1] - 3
    header = ",".join(["x", "y", "z"][:dim] + ["u_num", "u_ex", "abs_err"])
    buf = io.StringIO()
    buf.write(header + "\n")
    for row in table:
        buf.write(",".join(f"{v:.8e}" for v in row) + "\n")
    return buf.getvalue()

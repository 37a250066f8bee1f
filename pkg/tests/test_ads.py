import warnings

import numpy as np
import pytest

from levisolve.ads import assemble_ads, eval_ads_solution, solve_ads
from levisolve.geometry import circle_domain
from levisolve.kernels import (
    constant_conductivity,
    kernel_K11,
    kernel_K12,
    kernel_K21,
    kernel_K22,
)
from levisolve.problems import ProblemSpec, heart_problem
from levisolve.quadrature import adaptive_layers, brute_volume_potential


def harmonic_problem(sigma_value=3.0, center=(0.2, 0.1)):
    u = lambda p: p[..., 0] ** 2 - p[..., 1] ** 2 + 2.0
    return ProblemSpec(
        domain=circle_domain(radius=1.0, center=center),
        sigma=constant_conductivity(sigma_value, 2),
        source=lambda p: np.zeros(p.shape[:-1]),
        boundary_data=u,
        exact_solution=u,
        name="harmonic",
    )


def unknown_count(scheme):
    return int(2 * scheme.counts[: scheme.interior_layers].sum() + 2 * scheme.counts[-1])


def test_system_sizes():
    assert unknown_count(adaptive_layers(10, 3)) == 4784
    # toy case N=2, k1=0 under the layer rule: counts (1,2,4,4)
    assert unknown_count(adaptive_layers(2, 0)) == 2 * (1 + 2 + 4) + 8


def test_constant_sigma_structure():
    prob = harmonic_problem()
    scheme = adaptive_layers(3, 1)
    A, b = assemble_ads(prob, scheme)
    n_mu = int(2 * scheme.counts[: scheme.interior_layers].sum())
    # volume-density rows reduce to the identity with zero coupling
    assert np.allclose(A[:n_mu, :n_mu], np.eye(n_mu))
    assert np.allclose(A[:n_mu, n_mu:], 0.0)
    assert np.allclose(b[:n_mu], 0.0)


def test_constant_sigma_reduction():
    prob = harmonic_problem()
    scheme = adaptive_layers(4, 2)
    sol = solve_ads(prob, scheme)
    assert np.abs(sol.mu).max() <= 1e-8
    rng = np.random.default_rng(2)
    pts = np.asarray(prob.domain.center) + rng.uniform(-0.5, 0.5, size=(25, 2))
    vals = eval_ads_solution(sol, prob, pts)
    assert np.abs(vals - prob.exact_solution(pts)).max() <= 1e-6
    # single-point evaluation, including the center and a near-center offset
    c = np.asarray(prob.domain.center)
    assert abs(eval_ads_solution(sol, prob, c) - prob.exact_solution(c)) <= 1e-6
    assert abs(
        eval_ads_solution(sol, prob, c + [0.1, 0.0]) - prob.exact_solution(c + [0.1, 0.0])
    ) <= 1e-6


def test_solve_residual_invariant():
    prob = heart_problem()
    scheme = adaptive_layers(4, 2)
    A, b = assemble_ads(prob, scheme)
    sol = solve_ads(prob, scheme)
    x = np.concatenate([sol.mu, sol.psi])
    scale = np.abs(A).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max()
    assert np.abs(A @ x - b).max() <= 1e-8 * scale
    assert np.isfinite(sol.condition)


def test_assembly_matches_scalar_kernels():
    prob = heart_problem()
    scheme = adaptive_layers(3, 1)
    A, _ = assemble_ads(prob, scheme)
    dom, sig = prob.domain, prob.sigma
    L = scheme.interior_layers
    sizes = [2 * int(scheme.counts[k]) for k in range(L)]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    n_mu = int(offsets[-1])
    c = scheme.weights
    nb = 2 * int(scheme.counts[-1])

    # cross-layer volume entry: plain trapezoid of the raw kernel
    kr, jr, kc, jc = 1, 3, 3, 5
    row = offsets[kr] + jr
    col = offsets[kc] + jc
    t = scheme.angles(kr)[jr]
    tau = scheme.angles(kc)[jc]
    raw = kernel_K11(dom, sig, scheme.radii[kr], t, scheme.radii[kc], tau)
    expected = -c[kc] / (2 * scheme.counts[kc]) * raw
    assert np.isclose(A[row, col], expected, rtol=1e-12)

    # boundary-coupling entry in a volume row
    jb = 4
    tb = scheme.angles(L)[jb]
    k12 = kernel_K12(dom, sig, scheme.radii[kr], t, tb)
    assert np.isclose(A[row, n_mu + jb], k12 / nb, rtol=1e-12)

    # volume entry in a boundary row
    brow = n_mu + 2
    tcol = scheme.angles(kc)[jc]
    k21 = kernel_K21(dom, scheme.angles(L)[2], scheme.radii[kc], tcol)
    assert np.isclose(A[brow, col], c[kc] / (2 * scheme.counts[kc]) * k21, rtol=1e-12)

    # boundary double-layer entry (off-diagonal)
    k22 = kernel_K22(dom, scheme.angles(L)[2], scheme.angles(L)[7])
    assert np.isclose(A[brow, n_mu + 7], -k22 / nb, rtol=1e-12)


def test_eval_outside_domain_rejected():
    prob = harmonic_problem()
    sol = solve_ads(prob, adaptive_layers(2, 1))
    with pytest.raises(ValueError):
        eval_ads_solution(sol, prob, np.array([5.0, 5.0]))


def test_eval_near_node_warns():
    prob = harmonic_problem()
    sol = solve_ads(prob, adaptive_layers(2, 1))
    with pytest.warns(RuntimeWarning, match="quadrature cell"):
        eval_ads_solution(sol, prob, sol.nodes[3])


def test_volume_potential_consistency_with_oracle():
    # the evaluation-path quadrature of the volume potential agrees with the
    # independent polar-coordinate oracle for a smooth synthetic density
    prob = heart_problem()
    scheme = adaptive_layers(10, 3)
    sol = solve_ads(prob, scheme, estimate_condition=False)
    density = lambda p: np.exp(p[..., 0]) * (1.0 + 0.5 * p[..., 1])
    synthetic = sol.__class__(
        scheme=sol.scheme,
        mu=density(sol.nodes),
        psi=np.zeros_like(sol.psi),
        layer_offsets=sol.layer_offsets,
        nodes=sol.nodes,
        node_weights=sol.node_weights,
        boundary_points=sol.boundary_points,
        boundary_normals=sol.boundary_normals,
        boundary_speeds=sol.boundary_speeds,
        condition=1.0,
    )
    rng = np.random.default_rng(4)
    for _ in range(5):
        x = prob.domain.map(rng.uniform(0.1, 0.7), rng.uniform(0, 2 * np.pi))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            got = eval_ads_solution(synthetic, prob, x)
        want = brute_volume_potential(prob.domain, density, x)
        assert abs(got - want) <= 1e-4


def test_heart_coarse_run_accuracy():
    # a cheap end-to-end sanity run well below the benchmark resolution
    prob = heart_problem()
    sol = solve_ads(prob, adaptive_layers(5, 2), estimate_condition=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        u = eval_ads_solution(sol, prob, sol.nodes, check_domain=False)
    uex = prob.exact_solution(sol.nodes)
    rel = np.linalg.norm(u - uex) / np.linalg.norm(uex)
    assert rel < 5e-2

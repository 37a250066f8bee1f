import numpy as np
import pytest

from levisolve.geometry import (
    circle_domain,
    curve_eval,
    domain_map,
    ellipse_domain,
    heart_domain,
    jacobian,
    outward_normal,
    pinched_ball_surface,
    sphere_surface,
    surface_eval,
)


def test_circle_point_and_derivatives():
    dom = circle_domain()
    p, d1, d2 = curve_eval(dom, 0.0)
    assert np.allclose(p, [1.0, 0.0])
    assert np.allclose(d1, [0.0, 1.0])
    assert np.allclose(d2, [-1.0, 0.0])


def test_heart_point_at_zero():
    dom = heart_domain(center=(0.5, 1.0))
    p, d1, _ = curve_eval(dom, 0.0)
    assert np.allclose(p, [0.7, 1.0])
    assert np.allclose(d1, [0.0, 0.4])


def test_ellipse_point():
    dom = ellipse_domain(a=1.0, b=0.5, center=(0.5, 1.0))
    p, _, _ = curve_eval(dom, np.pi / 2)
    assert np.allclose(p, [0.5, 1.5])


def test_periodicity():
    dom = heart_domain()
    t = np.linspace(0, 2 * np.pi, 17)
    p1 = dom.boundary(t)[0]
    p2 = dom.boundary(t + 2 * np.pi)[0]
    assert np.allclose(p1, p2, atol=1e-12)


def test_outward_normals():
    assert np.allclose(outward_normal(circle_domain(), np.pi / 2), [0.0, 1.0])
    assert np.allclose(outward_normal(ellipse_domain(1.0, 0.5), 0.0), [1.0, 0.0])
    # heart at t=0: x'(0) = (0, 0.4) rotates to (1, 0)
    nu = outward_normal(heart_domain(), 0.0)
    assert np.allclose(nu, [1.0, 0.0])
    assert np.isclose(np.linalg.norm(nu), 1.0)


@pytest.mark.parametrize("factory", [circle_domain, lambda: ellipse_domain(1, 0.5), heart_domain])
def test_star_shapedness(factory):
    dom = factory()
    t = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    x = dom.centered(t)
    nu = dom.outward_normal(t)
    assert np.all(np.sum(x * nu, axis=-1) > 0)


def test_domain_map():
    heart = heart_domain()
    assert np.allclose(domain_map(heart, 0.0, 1.3), heart.center)
    assert np.allclose(domain_map(circle_domain(), 0.5, 0.0), [0.5, 0.0])
    assert np.allclose(domain_map(heart, 1.0, 0.0), [0.7, 1.0])
    with pytest.raises(ValueError):
        domain_map(heart, 1.5, 0.0)


def test_domain_map_injective_sampled():
    dom = heart_domain()
    rng = np.random.default_rng(0)
    eta = rng.uniform(0.05, 1.0, 60)
    t = rng.uniform(0.0, 2 * np.pi, 60)
    pts = dom.map(eta, t)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    np.fill_diagonal(d, 1.0)
    assert d.min() > 0


def test_jacobian_values():
    circ = circle_domain()
    tau = np.linspace(0, 2 * np.pi, 9)
    assert np.allclose(jacobian(circ, np.full(9, 0.37), tau), 0.37)
    assert jacobian(circ, 0.0, 1.0) == 0.0
    ell = ellipse_domain(1.0, 0.5)
    assert np.isclose(jacobian(ell, 1.0, 0.0), 0.5)


def test_jacobian_linear_in_radius():
    dom = heart_domain()
    tau = np.linspace(0, 2 * np.pi, 13)
    j1 = dom.jacobian(np.ones_like(tau), tau)
    for xi in (0.1, 0.33, 0.9):
        assert np.allclose(dom.jacobian(np.full_like(tau, xi), tau), xi * j1)


def test_area_identity_trapezoid():
    # (1/2) integral of x . nu |x'| dt equals the enclosed area
    for dom, area in ((circle_domain(), np.pi), (ellipse_domain(1, 0.5), np.pi / 2)):
        n = 16
        t = np.arange(n) * (2 * np.pi / n)
        val = dom.jacobian(np.ones(n), t).sum() * (2 * np.pi / n) / 2
        assert abs(val - area) < 1e-12


def test_unit_sphere_eval():
    sph = sphere_surface(1.0)
    p, nu, a = surface_eval(sph, np.pi / 2, 0.0)
    assert np.allclose(p, [1.0, 0.0, 0.0])
    assert np.allclose(nu, [1.0, 0.0, 0.0])
    assert np.isclose(a, 1.0)


def test_pinched_ball_radius():
    pb = pinched_ball_surface()
    assert np.isclose(pb.radius(np.pi / 2, np.pi / 4), 1.2)
    assert np.isclose(pb.radius(0.0, 0.3), 1.2)
    p, _, a = surface_eval(pb, 0.0, 0.0)
    assert np.allclose(p, [0.0, 0.0, 1.2])
    assert a == 0.0  # pole

    theta = np.linspace(0.1, np.pi - 0.1, 20)
    phi = np.linspace(0, 2 * np.pi, 20, endpoint=False)
    TH, PH = np.meshgrid(theta, phi)
    _, _, area = surface_eval(pb, TH, PH)
    assert np.all(area > 0)


def test_degenerate_curve_rejected():
    from levisolve.geometry import ParametricCurve2D, StarDomain2D

    bad = StarDomain2D(
        curve=ParametricCurve2D(
            point=lambda t: np.stack([np.cos(t), np.sin(t)], axis=-1),
            first_derivative=lambda t: np.zeros(np.shape(t) + (2,)),
            second_derivative=lambda t: np.zeros(np.shape(t) + (2,)),
        ),
        center=np.zeros(2),
    )
    with pytest.raises(ValueError):
        bad.outward_normal(0.3)

import numpy as np
import pytest

from app.convexify import (
    ConvexExtension,
    build_breve_U,
    build_hat_U,
    check_hat_convexity,
    check_shell_continuity,
    convex_extension_V,
    enumerate_V,
    grid_table,
    lyapunov_check,
    mollified_V,
    mollifier_rule,
    poincare_from_bobkov,
    second_moment,
    verify_boundary_resolution,
    verify_breve,
    verify_oscillation,
)
from app.convexify.construction import blend_weight, check_grid
from app.errors import ConfigurationError, DomainError, ParameterError, RegimeError
from app.potentials import DissipativitySpec, builtin
from app.potentials.checks import cube_grid


@pytest.fixture(scope="module")
def cosine():
    return builtin("cosine_perturbed_quadratic", 1, amplitude=0.5, radius=3.0)


@pytest.fixture(scope="module")
def hat(cosine):
    return build_hat_U(cosine)


@pytest.fixture(scope="module")
def breve(cosine):
    return build_breve_U(cosine)


def test_defaults_follow_radius(hat):
    assert hat.R == 3.0
    assert hat.eps == pytest.approx(0.15)
    assert hat.delta == pytest.approx(0.0075)
    assert hat.mu_strong == pytest.approx(0.5)


def test_build_rejects_missing_radius_and_bad_widths(cosine):
    with pytest.raises(ConfigurationError):
        build_hat_U(builtin("holder", 1))
    with pytest.raises(ParameterError):
        build_hat_U(cosine, eps=0.1, delta=0.05)


def test_breve_needs_top_exponent_one():
    with pytest.raises(RegimeError):
        build_breve_U(builtin("holder", 1, alpha=0.5), R=1.0)


def test_blend_weight_endpoints():
    w = blend_weight(np.array([3.15, 3.3, 5.0, 1.0]), 3.0, 0.15)
    assert w == pytest.approx([0.0, 1.0, 1.0, 0.0])


def test_hat_equals_U_outside_the_shell(hat, cosine):
    x = np.array([[-3.31], [3.31], [4.0], [-7.5]])
    assert np.array_equal(hat.hat_U(x), cosine.value(x))


def test_hat_oscillation_and_continuity(hat):
    grid = check_grid(hat, 801)
    osc = verify_oscillation(hat, grid)
    assert osc.passed, osc
    assert osc.statistic <= hat.osc_bound
    assert check_shell_continuity(hat).passed


def test_hat_is_convex_with_hessian_floor(hat):
    reports = check_hat_convexity(hat, check_grid(hat, 801))
    assert [r.name for r in reports] == ["hat_minus_g_convex", "hat_hessian_floor"]
    assert all(r.passed for r in reports), reports


def test_breve_checks(breve):
    reports = verify_breve(breve, check_grid(breve, 801))
    names = [r.name for r in reports]
    assert names == ["breve_oscillation", "breve_equals_U_outside", "breve_dissipativity"]
    assert all(r.passed for r in reports), reports
    assert breve.lambda0 == pytest.approx(2.0 * 1.5)
    # the quadratic added to U is removed in full, so U-breve = U outside the ball
    assert breve.shift == pytest.approx(0.5 * (1.5 + 3.0))
    far = np.array([[4.0], [-5.0]])
    assert breve.breve_U(far) == pytest.approx(breve.base.value(far), abs=1e-9)


def test_breve_U_requires_breve_kind(hat):
    with pytest.raises(ConfigurationError):
        hat.breve_U(np.zeros((1, 1)))
    with pytest.raises(ConfigurationError):
        verify_breve(hat)


def test_lyapunov_checks(cosine, breve):
    grid = cube_grid(6.0, 241, 1)
    gaussian = builtin("gaussian", 1)
    assert lyapunov_check(gaussian, gaussian.dissipativity, grid).passed
    assert lyapunov_check(cosine, cosine.dissipativity, grid).passed
    assert lyapunov_check(breve, cosine.dissipativity, grid).passed
    with pytest.raises(RegimeError):
        lyapunov_check(gaussian, DissipativitySpec(a=1.0, b=0.0, beta=1.5), grid)


def test_grid_table_columns(hat, breve):
    grid = check_grid(hat, 11)
    rows = grid_table(hat, grid, breve)
    assert len(rows) == 11
    assert set(rows[0]) == {"x0", "U", "V", "V_tilde", "hat_U", "breve_U"}
    assert np.isnan(grid_table(hat, grid)[0]["breve_U"])


def test_extension_is_linear_in_one_dimension():
    ext = ConvexExtension(lambda x: x[:, 0] ** 3, 2.0, 1)
    assert ext.inside(np.array([[0.0], [1.0]])) == pytest.approx([0.0, 4.0])
    with pytest.raises(DomainError):
        ext.inside(np.array([[2.5]]))


def test_extension_reproduces_affine_boundary_data():
    ext = ConvexExtension(lambda x: 1.0 + x[:, 0] - 2.0 * x[:, 1], 1.5, 2, M=60)
    pts = np.array([[0.0, 0.0], [0.5, -0.3], [-1.0, 0.7]])
    assert ext.inside(pts) == pytest.approx(1.0 + pts[:, 0] - 2.0 * pts[:, 1], abs=1e-9)


def test_extension_matches_exhaustive_search():
    ext = ConvexExtension(lambda x: np.cos(3.0 * np.arctan2(x[:, 1], x[:, 0])), 1.0, 2, M=12)
    for x in ([0.0, 0.0], [0.3, 0.2], [-0.5, 0.4], [0.1, -0.8]):
        assert ext.inside(np.array([x]))[0] == pytest.approx(enumerate_V(ext.points, ext.values, x), abs=1e-6)
    assert ext.boundary_min == pytest.approx(-1.0)


def test_extension_rejects_bad_inputs():
    with pytest.raises(ParameterError):
        ConvexExtension(lambda x: x[:, 0], 0.0, 1)
    with pytest.raises(ParameterError):
        ConvexExtension(lambda x: x[:, 0], 1.0, 2, M=2)
    with pytest.raises(ParameterError):
        ConvexExtension(lambda x: x[:, 0], 1.0, 2, M=8, oversample=0)
    with pytest.raises(DomainError):
        ConvexExtension(lambda x: x[:, 0], 1.0, 3)


def test_mollifier_rule():
    nodes, weights = mollifier_rule(0.1, 2, 8)
    assert weights.sum() == pytest.approx(1.0)
    assert np.all(np.abs(nodes) <= 0.1)
    assert nodes.T @ weights == pytest.approx([0.0, 0.0], abs=1e-15)
    with pytest.raises(ParameterError):
        mollifier_rule(0.1, 1, 7)


def test_second_moment_of_gaussian():
    gaussian = builtin("gaussian", 2)
    assert second_moment(gaussian.value, 1, 25.0) == pytest.approx(1.0, rel=1e-6)
    assert second_moment(gaussian.value, 2, 12.0) == pytest.approx(2.0, rel=1e-4)
    with pytest.raises(DomainError):
        second_moment(gaussian.value, 3, 5.0)


def test_poincare_from_bobkov_is_positive_and_K_scaled():
    model = builtin("quartic_tail_capped", 1)
    one = poincare_from_bobkov(model.dissipativity, 1.0, model.smoothness, 1, K=1.0)
    two = poincare_from_bobkov(model.dissipativity, 1.0, model.smoothness, 1, K=2.0)
    assert one > 0.0
    assert two == pytest.approx(one / 4.0)


def test_two_dimensional_hat(rng):
    model = builtin("cosine_perturbed_quadratic", 2, amplitude=0.5, radius=2.0)
    hat = build_hat_U(model, M=120)
    grid = check_grid(hat, 41)
    assert verify_oscillation(hat, grid).passed
    assert check_shell_continuity(hat).passed
    outside = np.array([[2.5, 0.0], [0.0, -3.0]])
    assert np.array_equal(hat.hat_U(outside), model.value(outside))


def test_functional_evaluators_match_methods(hat):
    x = np.array([[0.0], [1.0], [3.2]])
    assert convex_extension_V(hat, x) == pytest.approx(hat.V(x))
    # V is flat inside the ball for an even potential, so mollifying it changes nothing there
    assert mollified_V(hat, x[:2]) == pytest.approx(hat.V(x[:2]), abs=1e-9)


def test_doubling_boundary_points_barely_moves_V():
    model = builtin("cosine_perturbed_quadratic", 2, amplitude=0.5, radius=3.0)
    coarse = build_hat_U(model, M=360)
    fine = build_hat_U(model, M=720)
    grid = cube_grid(3.0, 61, 2)
    inner = grid[np.linalg.norm(grid, axis=1) <= 3.0]
    assert np.max(np.abs(coarse.V(inner) - fine.V(inner))) <= 1e-4

    report = verify_boundary_resolution(coarse, check_grid(coarse, 61))
    assert report.passed
    assert report.bound == 1e-4
    assert report.statistic <= 1e-4


def test_boundary_resolution_is_exact_in_one_dimension(hat):
    report = verify_boundary_resolution(hat)
    assert report.passed
    assert report.statistic == 0.0

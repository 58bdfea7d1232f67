import numpy as np
import pytest
from pydantic import ValidationError

from app.potentials import SmoothnessSpec, builtin
from app.rng import make_rng
from app.smoothing import (
    SmoothingConfig,
    check_grad_bounds,
    check_value_bound,
    check_variance,
    draw_perturbations,
    estimate_grad,
    estimate_value,
    make_params,
    stochastic_grad,
)
from app.smoothing import bounds


def _cfg(mu: float, d: int, p: float = 2.0, budget: int = 20_000) -> SmoothingConfig:
    return SmoothingConfig(mu=mu, pg=make_params(p, d), budget=budget)


def test_config_rejects_negative_mu():
    with pytest.raises(ValidationError):
        SmoothingConfig(mu=-0.1, pg=make_params(2.0, 1))


def test_zero_mu_is_the_potential_itself(rng, gaussian2):
    x = np.array([1.0, -2.0])
    est = estimate_value(gaussian2, _cfg(0.0, 2, budget=50), x, rng)
    assert est.mean == pytest.approx(2.5)
    assert est.stderr == 0.0


def test_zero_mu_gradient_does_not_touch_stream(gaussian2):
    rng = make_rng(5, 0)
    before = rng.bit_generator.state
    grad = stochastic_grad(gaussian2, _cfg(0.0, 2), np.array([0.5, 1.5]), rng)
    assert np.array_equal(grad, [0.5, 1.5])
    assert rng.bit_generator.state == before


def test_smoothed_gaussian_value(rng, gaussian2):
    # E (1/2)||x + mu xi||^2 = (1/2)||x||^2 + (mu^2 / 2) d
    x = np.array([1.0, -1.0])
    est = estimate_value(gaussian2, _cfg(0.3, 2), x, rng)
    assert abs(est.mean - 1.09) < 5.0 * est.stderr


def test_smoothed_gaussian_gradient_is_unbiased(rng, gaussian2):
    x = np.array([0.7, -0.2])
    est = estimate_grad(gaussian2, _cfg(0.5, 2), x, rng)
    assert est.budget == 20_000
    for mean, target, se in zip(est.mean, x, est.stderr):
        assert abs(mean - target) < 5.0 * se


def test_holder_gradient_at_origin_is_centred():
    model = builtin("holder", 1, alpha=0.5, L=1.0)
    est = estimate_grad(model, _cfg(0.1, 1, budget=100_000), np.zeros(1), make_rng(21, 0))
    assert est.budget == 100_000
    assert abs(est.mean[0]) < 3.0 * est.stderr[0]


def test_common_random_numbers_give_identical_estimates(gaussian2):
    cfg = _cfg(0.2, 2, p=1.5, budget=1000)
    xi = draw_perturbations(cfg, make_rng(1, 0))
    a = estimate_value(gaussian2, cfg, np.ones(2), make_rng(2, 0), xi=xi)
    b = estimate_value(gaussian2, cfg, np.ones(2), make_rng(3, 0), xi=xi)
    assert a.mean == b.mean


@pytest.mark.parametrize("name, params, d", [("gaussian", {}, 2), ("holder", {"alpha": 0.5, "L": 1.0}, 2),
                                             ("cosine_perturbed_quadratic", {"amplitude": 0.5}, 3)])
@pytest.mark.parametrize("p", [1.0, 2.0])
def test_value_and_gradient_bounds_hold(rng, name, params, d, p):
    model = builtin(name, d, **params)
    cfg = _cfg(0.1, d, p=p, budget=4000)
    value = check_value_bound(model, cfg, 4, 2.0, rng)
    grads = check_grad_bounds(model, cfg, 4, 2.0, rng)
    assert value.passed, value.rows
    assert grads.passed, grads.rows


def test_gradient_bound_report_layout(rng):
    model = builtin("gaussian", 2)
    report = check_grad_bounds(model, _cfg(0.1, 2, budget=500), 3, 1.0, rng)
    assert [row["check"] for row in report.rows] == ["grad"] * 3 + ["lipschitz"] * 3
    assert report.rows[0]["point"] == "0.0;0.0"
    assert report.worst_margin == min(row["margin"] for row in report.rows)


def test_variance_bound_and_unbiasedness(rng):
    model = builtin("gaussian", 2)
    cfg = _cfg(0.2, 2, budget=20_000)
    report = check_variance(model, cfg, np.array([1.0, 0.5]), 20_000, rng)
    assert [row["check"] for row in report.rows] == ["variance", "unbiased"]
    # trace variance of x + mu xi is mu^2 d
    assert report.rows[0]["estimate"] == pytest.approx(0.08, rel=0.05)
    assert report.passed


def test_large_mu_is_flagged(rng):
    model = builtin("gaussian", 1)
    report = check_value_bound(model, _cfg(0.8, 1, budget=200), 2, 1.0, rng)
    assert report.flagged
    assert "small-mu" in report.notes


def test_value_rows_use_the_simplified_bound(rng):
    model = builtin("holder", 2, alpha=0.5, L=1.0)
    cfg = _cfg(0.1, 2, p=1.5, budget=500)
    report = check_value_bound(model, cfg, 3, 1.0, rng)
    simplified = bounds.value_bound(model.smoothness, 0.1, 2, 1.5)
    assert all(row["bound"] == simplified for row in report.rows)
    assert simplified >= bounds.value_bound_exact(model.smoothness, 0.1, cfg.pg)
    assert "exact Gamma-ratio form" in report.notes


def test_closed_form_bounds():
    spec = SmoothnessSpec(components=[(1.0, 0.5), (2.0, 1.0)])
    assert bounds.value_bound(spec, 0.25, 4, 2.0) == pytest.approx(0.125 * 4**0.75 + 2.0 * 0.0625 * 4.0)
    assert bounds.grad_bound(spec, 0.25, 4, 2.0) == pytest.approx((0.5 + 0.5) * 8.0)
    assert bounds.lipschitz_bound(spec, 0.25, 4, 2.0) == pytest.approx((2.0 + 2.0) * 4.0)
    assert bounds.variance_bound(spec, 0.25, 4, 2.0) == pytest.approx(4.0 * 4 * 4 * 0.25 * 2.0)
    assert bounds.lipschitz_bound(spec, 0.0, 4, 2.0) == float("inf")

import math
from dataclasses import replace

import numpy as np
import pytest
from pydantic import ValidationError

from app.errors import ConfigurationError, ParameterError
from app.potentials import (
    DissipativitySpec,
    SmoothnessSpec,
    builtin,
    builtin_names,
    check_convexity_outside_ball,
    check_descent_bound,
    check_dissipativity,
    check_gradient_fd,
    check_lower_bound,
    check_mixture_smooth,
    check_stationary,
    dissipative_lower_bound,
)
from app.potentials import weak_smooth
from app.potentials.checks import cube_grid

MODELS = [
    ("gaussian", {}),
    ("holder", {"alpha": 0.5, "L": 1.0}),
    ("mixture_holder", {"components": [[1.0, 0.3], [0.5, 1.0]]}),
    ("cosine_perturbed_quadratic", {"amplitude": 0.5}),
    ("quartic_tail_capped", {"c": 1.5}),
]


def test_builtin_names():
    assert builtin_names() == sorted(name for name, _ in MODELS)


def test_builtin_unknown_name_and_bad_parameters():
    with pytest.raises(ConfigurationError):
        builtin("banana", 1)
    with pytest.raises(ConfigurationError):
        builtin("gaussian_mixture", 2)
    with pytest.raises(ConfigurationError):
        builtin("holder", 1, beta=3)
    with pytest.raises(ParameterError):
        builtin("cosine_perturbed_quadratic", 1, amplitude=1.5)


def test_smoothness_spec_validation():
    spec = SmoothnessSpec(components=[(2.0, 0.5), (3.0, 1.0)])
    assert (spec.N, spec.alpha, spec.alpha_N, spec.L, spec.L_N, spec.L_sum) == (2, 0.5, 1.0, 3.0, 3.0, 5.0)
    assert spec.scaled(2.0).components == [(4.0, 0.5), (6.0, 1.0)]
    with pytest.raises(ValidationError):
        SmoothnessSpec(components=[(1.0, 0.5), (1.0, 0.5)])
    with pytest.raises(ValidationError):
        SmoothnessSpec(components=[(0.0, 1.0)])
    with pytest.raises(ValidationError):
        DissipativitySpec(a=0.0, b=0.0, beta=2.0)


def test_holder_declares_antipodal_constant():
    model = builtin("holder", 2, alpha=0.5, L=1.0)
    assert model.smoothness.components[0][0] == pytest.approx(2.0**0.5)
    x = np.array([[1.0, 0.0]])
    gap = np.linalg.norm(model.gradient(x) - model.gradient(-x))
    # equality on antipodal pairs
    assert gap == pytest.approx(model.smoothness.L * 2.0**0.5)


@pytest.mark.parametrize("name, params", MODELS)
@pytest.mark.parametrize("d", [1, 3])
def test_declared_constants_hold(rng, name, params, d):
    model = builtin(name, d, **params)
    assert check_mixture_smooth(model, 2000, 4.0, rng).passed
    assert check_descent_bound(model, 2000, 4.0, rng).passed
    assert check_dissipativity(model, 2000, 6.0, rng).passed
    assert check_gradient_fd(model, 200, 4.0, rng).passed
    assert check_stationary(model).passed


@pytest.mark.parametrize("name, params", MODELS)
def test_lower_bound_holds_on_grid(name, params):
    model = builtin(name, 2, **params)
    report = check_lower_bound(model, cube_grid(5.0, 41, 2))
    assert report.passed
    assert report.n_evaluated == 41 * 41


def test_lower_bound_of_gaussian_is_quarter_square():
    bound = dissipative_lower_bound(builtin("gaussian", 1))
    assert bound(np.array([[2.0]]))[0] == pytest.approx(1.0)


def test_checks_catch_understated_constants(rng):
    model = builtin("gaussian", 2)
    weak = model.with_smoothness(SmoothnessSpec(components=[(0.5, 1.0)]))
    report = check_mixture_smooth(weak, 200, 2.0, rng)
    assert not report.passed
    assert len(report.witness) == 4
    strong = model.with_dissipativity(DissipativitySpec(a=2.0, b=0.0, beta=2.0))
    assert not check_dissipativity(strong, 200, 2.0, rng).passed


def test_dissipativity_check_needs_declaration(rng):
    model = builtin("gaussian", 1).with_dissipativity(None)
    with pytest.raises(ConfigurationError):
        check_dissipativity(model, 10, 1.0, rng)


@pytest.mark.parametrize("name, params", [("gaussian", {}), ("cosine_perturbed_quadratic", {"amplitude": 0.5}),
                                          ("quartic_tail_capped", {"c": 1.5})])
def test_convexity_outside_ball(rng, name, params):
    model = builtin(name, 2, **params)
    assert check_convexity_outside_ball(model, 500, 3.0 * model.convexity_radius, rng).passed


def test_convexity_outside_ball_needs_radius(rng):
    with pytest.raises(ConfigurationError):
        check_convexity_outside_ball(builtin("holder", 1), 10, 2.0, rng)


def test_gaussian_describe():
    info = builtin("gaussian", 3).describe()
    assert info["smoothness"] == [[1.0, 1.0]]
    assert info["dissipativity"] == {"a": 1.0, "b": 0.0, "beta": 2.0}
    assert builtin("gaussian", 3).log_normalizer == pytest.approx(1.5 * math.log(2.0 * math.pi))


class TestWeakSmooth:
    def test_descent_and_D3_prime(self):
        assert weak_smooth.descent_bound(1.0, 0.0, 1.0, 1.0) == pytest.approx(1.0)
        assert weak_smooth.compute_D3_prime(1.0, 0.0, 1.0, 1) == pytest.approx(24.0)

    def test_rejects_alpha_plus_ell_above_one(self):
        with pytest.raises(ParameterError):
            weak_smooth.value_bound(0.7, 0.5, 1.0, 0.1, 1, 2.0)

    def test_smoothing_bounds(self):
        assert weak_smooth.value_bound(0.5, 0.5, 1.0, 0.1, 4, 2.0) == pytest.approx(2.0 * 0.01 * 4.0)
        assert weak_smooth.grad_bound(0.5, 0.0, 1.0, 0.25, 4, 2.0) == pytest.approx(0.5 * 4.0**1.5)
        assert weak_smooth.lipschitz_bound(0.5, 0.0, 1.0, 0.25, 4, 2.0) == pytest.approx(2.0 * 4.0)

    def test_one_step_recursion_contracts_to_fixed_point(self):
        eta, gamma, alpha, D = 0.01, 1.0, 1.0, 24.0
        assert eta <= weak_smooth.one_step_eta_cap(alpha, 1.0, gamma)
        H = 5.0
        for _ in range(20_000):
            H = weak_smooth.one_step_recursion(H, eta, gamma, alpha, D)
        fixed = 2.0 * eta ** (alpha + 1.0) * D / (1.0 - math.exp(-gamma * eta))
        assert H == pytest.approx(fixed, rel=1e-6)


def test_doubled_gradient_is_caught(rng):
    model = builtin("gaussian", 2)
    wrong = replace(model, gradient=lambda x: 2.0 * np.asarray(x, dtype=float))
    assert not check_gradient_fd(wrong, 100, 2.0, rng).passed
    assert not check_descent_bound(wrong, 500, 2.0, rng).passed


def test_descent_tolerance_is_absolute(rng):
    model = builtin("gaussian", 1)
    # a large constant offset must not hide a 1e-5 curvature deficit
    lifted = replace(model, value=lambda x: model.value(x) + 1e4,
                     smoothness=SmoothnessSpec(components=[(1.0 - 1e-5, 1.0)]))
    report = check_descent_bound(lifted, 500, 2.0, rng)
    assert not report.passed
    assert report.max_violation > 1e-6
    assert check_descent_bound(replace(model, value=lambda x: model.value(x) + 1e4), 500, 2.0, rng).passed

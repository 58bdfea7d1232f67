import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import norm

from app.diagnostics import (
    Estimate,
    bias_scaling_fit,
    diagnose,
    grad_moment_check,
    kl_estimate,
    kl_gaussian,
    kl_knn,
    kl_knn_two_sample,
    kl_quadrature,
    log_partition,
    moment_from_kl_check,
    moment_kl_terms,
    pinsker_check,
    smoothing_w2_bound,
    smoothing_w2_check,
    talagrand_check,
    tv_estimate,
    w2_estimate,
)
from app.errors import ConfigurationError, DomainError, InsufficientSamplesError, ParameterError
from app.potentials import SmoothnessSpec, builtin
from app.rng import make_rng


def _normal(seed: int, n: int, d: int = 1, scale: float = 1.0, shift: float = 0.0) -> np.ndarray:
    return shift + scale * make_rng(seed, 0).standard_normal((n, d))


def test_kl_gaussian_closed_forms():
    assert kl_gaussian(1.0, 1.0) == 0.0
    assert kl_gaussian(1.0526315789473684, 1.0) == pytest.approx(6.69e-4, rel=2e-3)
    assert kl_gaussian(2.0 * np.eye(2), np.eye(2)) == pytest.approx(kl_gaussian(2.0, 1.0, d=2))
    with pytest.raises(ParameterError):
        kl_gaussian(-1.0, 1.0)


def test_log_partition_quadrature_matches_closed_form():
    model = builtin("gaussian", 1)
    assert log_partition(model) == pytest.approx(0.5 * math.log(2.0 * math.pi))
    assert log_partition(replace(model, log_normalizer=None)) == pytest.approx(0.5 * math.log(2.0 * math.pi),
                                                                                abs=1e-8)
    model2 = replace(builtin("gaussian", 2), log_normalizer=None)
    assert log_partition(model2, extent=12.0) == pytest.approx(math.log(2.0 * math.pi), abs=1e-6)


def test_kl_quadrature_near_zero_for_exact_draws(gaussian1):
    est = kl_quadrature(_normal(1, 20_000), gaussian1, make_rng(0, 1), n_boot=50)
    assert est.method == "quadrature"
    assert abs(est.estimate) < 0.02
    assert est.stderr > 0.0


def test_kl_quadrature_recovers_variance_mismatch(gaussian1):
    est = kl_quadrature(_normal(2, 20_000, scale=1.5), gaussian1, make_rng(0, 1), n_boot=50)
    assert est.estimate == pytest.approx(kl_gaussian(2.25, 1.0), abs=0.03)


def test_kl_quadrature_is_row_order_invariant(gaussian1):
    x = _normal(3, 2000, scale=1.2)
    a = kl_quadrature(x, gaussian1, make_rng(0, 1), n_boot=10)
    b = kl_quadrature(x[::-1].copy(), gaussian1, make_rng(0, 1), n_boot=10)
    assert a.notes == b.notes


def test_kl_knn_three_dimensions():
    model = builtin("gaussian", 3)
    est = kl_knn(_normal(4, 20_000, d=3, scale=1.5), model)
    assert est.estimate == pytest.approx(kl_gaussian(2.25, 1.0, d=3), abs=0.1)


def test_kl_knn_two_sample():
    est = kl_knn_two_sample(_normal(5, 10_000, d=2, scale=1.5), _normal(6, 10_000, d=2))
    assert est.method == "knn_two_sample"
    assert est.estimate == pytest.approx(kl_gaussian(2.25, 1.0, d=2), abs=0.1)


def test_kl_estimate_dispatch_and_errors(gaussian1):
    with pytest.raises(ConfigurationError):
        kl_estimate(_normal(7, 200), gaussian1, method="histogram")
    with pytest.raises(InsufficientSamplesError):
        kl_estimate(_normal(7, 50), gaussian1)
    with pytest.raises(DomainError):
        kl_quadrature(_normal(7, 200, d=3), builtin("gaussian", 3))
    model = replace(builtin("gaussian", 4), log_normalizer=None)
    with pytest.raises(ConfigurationError):
        kl_estimate(_normal(7, 200, d=4), model, method="knn")
    est = kl_estimate(_normal(7, 500, d=4), model, method="knn", reference=_normal(8, 500, d=4))
    assert est.method == "knn_two_sample"


def test_tv_of_exact_draws_sits_at_the_floor(gaussian1):
    est = tv_estimate(_normal(9, 20_000), gaussian1, make_rng(0, 2), n_boot=50)
    assert est.floor > 0.0
    assert est.estimate < 2.0 * est.floor + 0.01


def test_tv_of_shifted_draws(gaussian1):
    est = tv_estimate(_normal(10, 20_000, shift=1.0), gaussian1, make_rng(0, 2), n_boot=50)
    assert est.estimate == pytest.approx(2.0 * norm.cdf(0.5) - 1.0, abs=0.03)


def test_w2_one_dimensional(gaussian1):
    shifted = w2_estimate(_normal(11, 5000), _normal(12, 5000, shift=1.0), make_rng(0, 3), n_boot=50)
    assert shifted.estimate == pytest.approx(1.0, abs=0.06)
    to_model = w2_estimate(_normal(13, 5000, shift=0.5), gaussian1, make_rng(0, 3), n_boot=50)
    assert to_model.estimate == pytest.approx(0.5, abs=0.05)
    assert to_model.floor >= 0.0


def test_w2_assignment_in_two_dimensions():
    est = w2_estimate(_normal(14, 1000, d=2), _normal(15, 1000, d=2, shift=1.0),
                      make_rng(0, 3))
    assert est.method == "assignment"
    assert 1.2 < est.estimate < 1.75


def test_w2_triangle_inequality_on_fixed_batches():
    a = _normal(30, 2000)
    b = _normal(31, 2000, shift=0.6)
    c = _normal(32, 2000, scale=1.2, shift=1.1)
    ab, bc, ac = (w2_estimate(p, q, make_rng(0, 4), n_boot=50) for p, q in ((a, b), (b, c), (a, c)))
    slack = 3.0 * math.sqrt(ab.stderr**2 + bc.stderr**2 + ac.stderr**2)
    assert ac.estimate <= ab.estimate + bc.estimate + slack

    a2, b2, c2 = _normal(33, 600, d=2), _normal(34, 600, d=2, shift=0.6), _normal(35, 600, d=2) + np.array([1.1, -0.4])
    ab, bc, ac = (w2_estimate(p, q, make_rng(0, 5)) for p, q in ((a2, b2), (b2, c2), (a2, c2)))
    slack = 3.0 * math.sqrt(ab.stderr**2 + bc.stderr**2 + ac.stderr**2)
    assert ac.estimate <= ab.estimate + bc.estimate + slack


def test_w2_errors(gaussian2):
    with pytest.raises(ConfigurationError):
        w2_estimate(_normal(16, 100, d=2), gaussian2)
    with pytest.raises(ParameterError):
        w2_estimate(_normal(16, 100, d=2), _normal(17, 100, d=3))


def test_pinsker_and_talagrand_checks():
    kl = Estimate(estimate=0.02, stderr=0.0)
    assert pinsker_check(kl, Estimate(estimate=0.09, stderr=0.0)).passed
    assert not pinsker_check(kl, Estimate(estimate=0.2, stderr=0.0)).passed
    # the TV floor is granted as allowance
    assert pinsker_check(kl, Estimate(estimate=0.2, stderr=0.0, floor=0.11)).passed
    kl, w2 = Estimate(estimate=0.5, stderr=0.0), Estimate(estimate=0.9, stderr=0.0)
    assert talagrand_check(kl, w2, 1.0).passed
    assert not talagrand_check(kl, w2, 4.0).passed
    with pytest.raises(ParameterError):
        talagrand_check(kl, Estimate(estimate=0.1, stderr=0.0), 0.0)


def test_grad_moment_check(gaussian1):
    x = _normal(18, 5000)
    check = grad_moment_check(x, gaussian1)
    assert check.passed
    assert check.rhs == pytest.approx(2.0)
    assert not grad_moment_check(x, gaussian1, spec=SmoothnessSpec(components=[(0.5, 1.0)])).passed


def test_moment_from_kl(gaussian1):
    d_tilde, mu_tilde = moment_kl_terms(gaussian1.smoothness, gaussian1.dissipativity, 1, 0.0)
    assert d_tilde == pytest.approx(0.5 * (math.log(math.pi) + math.log(8.0)))
    assert mu_tilde == pytest.approx(0.0)
    check = moment_from_kl_check(_normal(19, 2000), gaussian1, kl_upper=0.01)
    assert check.passed
    assert check.rhs == pytest.approx(8.0 * (0.01 + d_tilde))
    with pytest.raises(ConfigurationError):
        moment_from_kl_check(_normal(19, 10), gaussian1.with_dissipativity(None), 0.0)


def test_bias_scaling_fit():
    etas = [0.01, 0.02, 0.05, 0.1]
    fit = bias_scaling_fit(etas, [3.0 * e**2 for e in etas])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.r2 == pytest.approx(1.0)
    assert fit.n_points == 4
    with pytest.raises(InsufficientSamplesError):
        bias_scaling_fit(etas[:3], [1.0, 2.0, 3.0])
    with pytest.raises(ParameterError):
        bias_scaling_fit(etas, [1.0, 2.0])
    with pytest.raises(ParameterError):
        bias_scaling_fit(etas, [1.0, -2.0, 3.0, 4.0])


def test_smoothing_w2(gaussian1):
    assert smoothing_w2_bound(gaussian1.smoothness, 0.01, 1, 2.0, 1.0) == pytest.approx(8.24e-4)
    check = smoothing_w2_check(gaussian1, 0.05, n=20_000, rng=make_rng(0, 4), budget=1024)
    assert check.passed
    assert check.rhs == pytest.approx(8.24 * 0.0025, rel=1e-4)
    zero = smoothing_w2_check(gaussian1, 0.0, E2=1.0)
    assert zero.lhs == 0.0 and zero.passed
    with pytest.raises(DomainError):
        smoothing_w2_check(builtin("gaussian", 2), 0.05)
    with pytest.raises(ParameterError):
        smoothing_w2_check(gaussian1, -0.1, E2=1.0)


def test_diagnose_one_dimension(gaussian1):
    report = diagnose(_normal(20, 2000), gaussian1, gamma=1.0, rng=make_rng(0, 5), n_boot=40)
    assert report.kl is not None and report.tv is not None and report.w2 is not None
    assert [c.name for c in report.checks] == ["pinsker", "talagrand", "grad_moment", "moment_from_kl"]
    rows = report.rows()
    assert [r["kind"] for r in rows] == ["estimate"] * 3 + ["check"] * 4


def test_diagnose_skips_unsupported_estimators():
    model = builtin("gaussian", 3)
    report = diagnose(_normal(21, 150, d=3), model, rng=make_rng(0, 5), n_boot=10)
    assert report.kl is None and report.tv is None and report.w2 is None
    assert [c.name for c in report.checks] == ["grad_moment"]
    assert any(note.startswith("kl skipped") for note in report.notes)
    assert any(note.startswith("w2 skipped") for note in report.notes)


def test_diagnose_catches_a_wrong_target(gaussian1):
    report = diagnose(_normal(22, 500, shift=3.0), gaussian1, rng=make_rng(0, 5), n_boot=20)
    assert "grad_moment" in report.failed

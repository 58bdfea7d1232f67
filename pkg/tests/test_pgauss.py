import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from app.errors import OutOfRangeError, ParameterError
from app.rng import make_rng
from app.smoothing import pgauss


@pytest.mark.parametrize("p, d", [(0.5, 1), (2.5, 1), (1.5, 0)])
def test_make_params_rejects_out_of_range(p, d):
    with pytest.raises(ParameterError):
        pgauss.make_params(p, d)


def test_normalizer_closed_forms():
    assert pgauss.normalizer(pgauss.make_params(2.0, 1)) == pytest.approx(math.sqrt(2.0 * math.pi))
    assert pgauss.normalizer(pgauss.make_params(1.0, 1)) == pytest.approx(2.0)
    assert pgauss.normalizer(pgauss.make_params(2.0, 3)) == pytest.approx((2.0 * math.pi) ** 1.5)


def test_normalizer_overflow_points_to_log_form():
    params = pgauss.make_params(1.0, 2000)
    with pytest.raises(OutOfRangeError):
        pgauss.normalizer(params)
    assert pgauss.log_normalizer(params) == pytest.approx(2000 * math.log(2.0))


def test_norm_moment_known_values():
    assert pgauss.norm_moment(pgauss.make_params(2.0, 1), 2) == pytest.approx(1.0)
    # Laplace coordinate: E t^2 = 2
    assert pgauss.norm_moment(pgauss.make_params(1.0, 1), 2) == pytest.approx(2.0)
    assert pgauss.norm_moment(pgauss.make_params(2.0, 4), 2) == pytest.approx(4.0)
    assert pgauss.norm_moment(pgauss.make_params(1.5, 3), 0) == pytest.approx(1.0)


def test_norm_moment_rejects_negative_order():
    with pytest.raises(ParameterError):
        pgauss.norm_moment(pgauss.make_params(2.0, 1), -1)


@pytest.mark.parametrize("p, d, n", [(1.0, 1, 2), (1.0, 5, 3), (1.0, 10, 4), (2.0, 1, 3), (2.0, 3, 3),
                                     (2.0, 10, 4), (1.5, 1, 2), (1.5, 10, 2)])
def test_norm_moment_sandwich_brackets_the_moment(p, d, n):
    params = pgauss.make_params(p, d)
    lower, upper = pgauss.norm_moment_sandwich(params, n)
    assert lower <= pgauss.norm_moment(params, n) <= upper


def test_sandwich_lower_end_is_zero_below_p():
    lower, upper = pgauss.norm_moment_sandwich(pgauss.make_params(2.0, 1), 1)
    assert lower == 0.0
    assert pgauss.norm_moment(pgauss.make_params(2.0, 1), 1) == pytest.approx(math.sqrt(2.0 / math.pi))
    assert upper >= math.sqrt(2.0 / math.pi)


def test_sample_shape_and_rejects_empty(rng):
    params = pgauss.make_params(1.3, 4)
    assert pgauss.sample(params, rng, 7).shape == (7, 4)
    with pytest.raises(ParameterError):
        pgauss.sample(params, rng, 0)


@pytest.mark.parametrize("p", [1.0, 1.2, 1.5, 2.0])
def test_sample_matches_norm_moment(rng, p):
    params = pgauss.make_params(p, 3)
    xi = pgauss.sample(params, rng, 200_000)
    values = pgauss.p_norm(xi, p) ** 2
    stderr = values.std(ddof=1) / math.sqrt(values.size)
    assert abs(values.mean() - pgauss.norm_moment(params, 2)) < 5.0 * stderr


def test_sample_coordinate_variance_and_symmetry(rng):
    p = 1.2
    xi = pgauss.sample(pgauss.make_params(p, 1), rng, 200_000)[:, 0]
    assert xi.var() == pytest.approx(pgauss.coordinate_variance(p), rel=0.02)
    assert abs(xi.mean()) < 0.02


def test_sample_is_reproducible_per_stream():
    params = pgauss.make_params(1.5, 2)
    a = pgauss.sample(params, make_rng(3, 9), 100)
    b = pgauss.sample(params, make_rng(3, 9), 100)
    assert np.array_equal(a, b)


def test_log_density_integrates_to_one():
    params = pgauss.make_params(1.4, 1)
    grid = np.linspace(-40.0, 40.0, 200_001)
    density = np.exp(pgauss.log_density(params, grid[:, None]))
    assert trapezoid(density, grid) == pytest.approx(1.0, rel=1e-6)

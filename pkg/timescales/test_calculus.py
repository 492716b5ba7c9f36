import math

import numpy as np
import pytest

from timescales import (
    BoundaryError,
    IntegerScale,
    NonRegressiveError,
    QScale,
    SampledFunction,
    TimeScale,
    TimeScaleError,
    UniformScale,
    circle_minus,
    circle_plus,
    delta_antiderivative,
    delta_derivative,
    delta_integral,
    exp_table,
    graininess,
    sigma,
    solve_first_order,
    ts_exp,
)


def random_scale(rng, n):
    """Dyadic points so that sums and differences stay exact."""
    steps = rng.integers(1, 5, size=n - 1) / 4.0
    return TimeScale.from_points(np.concatenate([[0.0], np.cumsum(steps)]))


def test_sigma_and_graininess():
    ts = TimeScale(points=(0.0, 0.5, 1.0))

    assert sigma(ts, 0.0) == 0.5
    assert sigma(ts, 1.0) == 1.0
    assert sigma(TimeScale(points=(1.0, 2.0, 4.0, 8.0)), 2.0) == 4.0
    assert graininess(ts, 0.5) == 0.5
    assert graininess(ts, 1.0) == 0.0
    assert graininess(IntegerScale(0, 2), 0.0) == 1.0
    with pytest.raises(TimeScaleError):
        sigma(ts, 0.25)


def test_sigma_is_monotone():
    ts = QScale(1.0, 1.5, 12)
    jumps = [sigma(ts, t) for t in ts.points]

    assert all(a <= b for a, b in zip(jumps, jumps[1:]))


def test_delta_derivative_examples():
    squares = SampledFunction.from_callable(IntegerScale(0, 5), lambda t: t * t)
    assert delta_derivative(squares, 2.0) == 5.0

    fine = UniformScale(0.0, 1.0, 1001)
    fine_squares = SampledFunction.from_callable(fine, lambda t: t * t)
    # 2t + h on a step-h scale
    assert delta_derivative(fine_squares, fine.points[500]) == pytest.approx(1.001, abs=1e-9)

    constant = SampledFunction.from_callable(TimeScale(points=(1.0, 2.0, 4.0)), lambda t: 7.0)
    assert delta_derivative(constant, 1.0) == 0.0


def test_delta_derivative_at_max_is_an_error():
    f = SampledFunction.from_callable(IntegerScale(0, 3), lambda t: t)
    with pytest.raises(BoundaryError):
        delta_derivative(f, 3.0)


def test_delta_integral_examples():
    ts = IntegerScale(0, 3)
    assert delta_integral(SampledFunction.from_callable(ts, lambda t: 1.0), 0.0, 3.0) == 3.0
    assert delta_integral(SampledFunction.from_callable(ts, lambda t: t), 0.0, 3.0) == 3.0

    fine = UniformScale(0.0, 1.0, 1001)
    identity = SampledFunction.from_callable(fine, lambda t: t)
    assert delta_integral(identity, 0.0, 1.0) == pytest.approx(0.5, abs=1e-3)

    with pytest.raises(TimeScaleError):
        delta_integral(identity, 1.0, 0.0)


def test_delta_integral_is_additive():
    rng = np.random.default_rng(7)
    ts = random_scale(rng, 9)
    f = SampledFunction(scale=ts, values=tuple(float(v) for v in rng.integers(-5, 6, size=9)))
    t1, t2, t3 = ts.points[1], ts.points[4], ts.points[8]

    assert delta_integral(f, t1, t3) == delta_integral(f, t1, t2) + delta_integral(f, t2, t3)


def test_fundamental_theorem_is_exact():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        ts = random_scale(rng, n)
        f = SampledFunction(scale=ts, values=tuple(float(v) for v in rng.integers(-8, 9, size=n)))
        big_f = delta_antiderivative(f)
        for t in ts.points[:-1]:
            assert delta_derivative(big_f, t) == f(t)


def test_circle_arithmetic():
    assert circle_minus(1.0, 1.0) == -0.5
    assert circle_minus(3.0, 0.0) == -3.0
    with pytest.raises(NonRegressiveError):
        circle_minus(2.0, -0.5)

    p, mu = 0.7, 0.3
    assert circle_plus(p, circle_minus(p, mu), mu) == pytest.approx(0.0, abs=1e-15)


def test_exponential_on_integers_matches_closed_form():
    ts = IntegerScale(0, 20)
    for lam in (0.5, 1.0, 2.0):
        for t in ts.points:
            assert ts_exp(lam, t, 0.0, ts) == pytest.approx((1.0 + lam) ** t, rel=1e-12)
    assert ts_exp(1.0, 3.0, 0.0, IntegerScale(0, 3)) == 8.0


def test_exponential_on_fine_uniform_scale_approaches_e():
    ts = UniformScale(0.0, 1.0, 10_001)
    assert abs(ts_exp(1.0, 1.0, 0.0, ts) - math.e) <= 3e-4


def test_exponential_on_qscale_matches_direct_product():
    ts = QScale(1.0, 2.0, 10)
    expected = 1.0
    for k in range(9):
        expected *= 1.0 + (ts.points[k + 1] - ts.points[k]) * 0.3
    assert ts_exp(0.3, ts.max, ts.min, ts) == pytest.approx(expected, rel=1e-12)


def test_exponential_identities():
    ts = QScale(0.5, 1.7, 7)
    p = SampledFunction.from_callable(ts, lambda t: math.sin(t) + 0.2)
    minus_p = SampledFunction(
        scale=ts,
        values=tuple(circle_minus(v, m) for v, m in zip(p.values, ts.mu)),
    )
    for t0 in ts.points:
        assert ts_exp(p, t0, t0) == 1.0
        for t in ts.points:
            product = ts_exp(minus_p, t, t0) * ts_exp(p, t, t0)
            assert product == pytest.approx(1.0, rel=1e-12)
            for r in ts.points:
                lhs = ts_exp(p, t, r) * ts_exp(p, r, t0)
                assert abs(lhs - ts_exp(p, t, t0)) <= 1e-12 * abs(ts_exp(p, t, t0))


def test_exponential_is_positive_when_positively_regressive():
    ts = IntegerScale(0, 10)
    p = SampledFunction.from_callable(ts, lambda t: -0.9 + 0.05 * t)
    table = exp_table(p, 4.0)

    assert all(v > 0 for v in table.values)
    assert table(4.0) == 1.0


def test_exponential_rejects_non_regressive_coefficient():
    ts = IntegerScale(0, 3)
    with pytest.raises(NonRegressiveError):
        ts_exp(-1.0, 3.0, 0.0, ts)
    with pytest.raises(TimeScaleError):
        ts_exp(1.0, 3.0, 0.0)


def test_solve_first_order_examples():
    assert solve_first_order(1.0, 1.0, IntegerScale(0, 2)).values == (1.0, 2.0, 4.0)
    assert solve_first_order(0.0, 5.0, IntegerScale(0, 4)).values == (5.0,) * 5
    assert solve_first_order(-0.5, 2.0, IntegerScale(0, 1)).values == (2.0, 1.0)


def test_solve_first_order_matches_exponential_bitwise():
    ts = QScale(1.0, 1.3, 9)
    p = SampledFunction.from_callable(ts, lambda t: 0.4 / t)
    u = solve_first_order(p, 2.5, ts)

    for t in ts.points:
        assert u(t) == 2.5 * ts_exp(p, t, ts.min)

import numpy as np
import pytest
from pydantic import ValidationError

from dynamics import (
    GridFunction,
    ProductDomain,
    SolutionTriple,
    decay_matrix,
    differentiate,
    double_integral,
    double_integral_table,
    log_weight_table,
    mixed_delta,
    partial_delta,
    s_norm,
    w_seminorm,
    w_seminorm_table,
    weight,
    weight_table,
    z_integral,
)
from dynamics.serializer import read_csv, to_csv_rows, write_csv
from timescales import IntegerScale, SampledFunction, TimeScale, TimeScaleError, ts_exp


def lattice(n1, n2, zscale=(0.0, 1.0)):
    return ProductDomain(t1=IntegerScale(0, n1 - 1), t2=IntegerScale(0, n2 - 1), zscale=TimeScale(points=zscale))


def binary_scale(rng, n):
    """Steps that are powers of two keep every quotient exact."""
    steps = 2.0 ** rng.integers(-2, 2, size=n - 1)
    return TimeScale(points=tuple(np.concatenate([[0.0], np.cumsum(steps)])))


def random_domain(rng, max_points=8):
    n1, n2 = (int(n) for n in rng.integers(2, max_points + 1, size=2))
    nz = int(rng.integers(2, 4))
    return ProductDomain(t1=binary_scale(rng, n1), t2=binary_scale(rng, n2), zscale=binary_scale(rng, nz))


def test_domain_corner_and_shape():
    d = lattice(4, 3, (0.0, 1.0, 2.0))

    assert (d.x0, d.y0, d.a, d.b) == (0.0, 0.0, 0.0, 2.0)
    assert d.shape == (4, 3, 3)
    assert d.locate(3.0, 2.0, 1.0) == (3, 2, 1)


def test_domain_needs_a_proper_z_interval():
    with pytest.raises(ValidationError):
        ProductDomain(t1=IntegerScale(0, 2), t2=IntegerScale(0, 2), zscale=TimeScale(points=(1.0,)))


def test_grid_function_shape_is_checked():
    d = lattice(3, 3)
    with pytest.raises(ValidationError):
        GridFunction(domain=d, values=np.zeros((3, 2, 2)))


def test_partial_delta_examples():
    d = lattice(4, 3)
    du = partial_delta(GridFunction.from_callable(d, lambda x, y, z: x), 1)
    assert np.all(du.values == 1.0)
    assert du.boundary[-1].all() and not du.boundary[:-1].any()

    constant = GridFunction.constant(d, 4.0)
    assert np.all(partial_delta(constant, 1).values == 0.0)
    assert np.all(partial_delta(constant, 2).values == 0.0)

    xy = GridFunction.from_callable(lattice(3, 3), lambda x, y, z: x * y)
    assert partial_delta(xy, 1)[1, 1, 0] == 1.0


def test_partial_delta_copies_the_last_quotient():
    d = lattice(3, 2)
    squares = partial_delta(GridFunction.from_callable(d, lambda x, y, z: x * x), 1)

    assert squares.values[:, 0, 0].tolist() == [1.0, 3.0, 3.0]


def test_partial_delta_rejects_bad_direction():
    u = GridFunction.zeros(lattice(2, 2))
    with pytest.raises(TimeScaleError):
        partial_delta(u, 3)


def test_mixed_delta_examples():
    d = lattice(4, 4)
    assert np.all(mixed_delta(GridFunction.from_callable(d, lambda x, y, z: x * y)).values == 1.0)
    assert np.all(mixed_delta(GridFunction.from_callable(d, lambda x, y, z: x + y)).values == 0.0)


def test_mixed_delta_needs_two_points_per_axis():
    d = ProductDomain(t1=IntegerScale(0, 0), t2=IntegerScale(0, 3), zscale=TimeScale(points=(0.0, 1.0)))
    with pytest.raises(TimeScaleError):
        mixed_delta(GridFunction.zeros(d))


def test_mixed_partials_commute():
    rng = np.random.default_rng(3)
    for _ in range(25):
        d = random_domain(rng)
        u = GridFunction(domain=d, values=rng.integers(-8, 9, size=d.shape).astype(float))
        one_two = partial_delta(partial_delta(u, 1), 2).values[:-1, :-1]
        two_one = partial_delta(partial_delta(u, 2), 1).values[:-1, :-1]

        assert np.array_equal(one_two, two_one)
        assert np.array_equal(mixed_delta(u).values[:-1, :-1], one_two)


def test_double_integral_examples():
    d = lattice(4, 3)
    ones = GridFunction.constant(d, 1.0)
    assert double_integral(ones, 3.0, 2.0) == 6.0
    assert double_integral(ones, 0.0, 2.0) == 0.0

    small = lattice(3, 3)
    g = GridFunction.from_callable(small, lambda x, y, z: x + y)
    assert double_integral(g, 2.0, 2.0) == 4.0
    assert double_integral_table(g)[2, 2, 0] == 4.0


def test_reconstruction_identity_is_exact():
    """mixed_delta undoes the double integral at every interior point"""
    rng = np.random.default_rng(5)
    for _ in range(50):
        d = random_domain(rng)
        g = GridFunction(domain=d, values=rng.integers(-8, 9, size=d.shape).astype(float))
        table = GridFunction(domain=d, values=double_integral_table(g))

        assert np.array_equal(mixed_delta(table).values[:-1, :-1], g.values[:-1, :-1])


def test_z_integral_examples():
    zscale = IntegerScale(0, 2)
    assert z_integral(np.ones(3), zscale) == 2.0
    assert z_integral(SampledFunction.from_callable(zscale, lambda q: q)) == 1.0

    pair = TimeScale(points=(0.5, 2.0))
    assert z_integral(np.array([3.0, 100.0]), pair) == 1.5 * 3.0


def test_w_seminorm_examples():
    d = lattice(4, 3)
    assert w_seminorm(SolutionTriple.constant(d, 1.0), (1, 1, 0)) == 1.0
    assert w_seminorm(SolutionTriple.zero(d), (2, 2, 1)) == 0.0

    triple = differentiate(GridFunction.from_callable(d, lambda x, y, z: x))
    assert w_seminorm(triple, (2, 1, 0)) == 3.0


def test_weight_examples():
    d = lattice(3, 3)
    assert weight(d, 0.7, (0, 0, 0)) == 1.0
    assert weight(d, 1.0, (2, 1, 0)) == 8.0
    assert np.all(weight_table(d, 1e-300) == 1.0)


def test_weight_factors_along_y():
    d = lattice(4, 5, (0.0, 1.0, 2.0))
    e = weight_table(d, 1.0)
    for j, y in enumerate(d.t2.points):
        assert np.array_equal(e[:, j, :], e[:, 0, :] * ts_exp(1.0, y, d.y0, d.t2))


def test_weight_is_positive_and_nondecreasing():
    rng = np.random.default_rng(9)
    d = random_domain(rng)
    e = weight_table(d, 0.4)

    assert np.all(e > 0)
    for axis in range(3):
        assert np.all(np.diff(e, axis=axis) >= 0)


def test_s_norm_examples():
    d = lattice(3, 3)
    assert s_norm(SolutionTriple.zero(d), 1.0) == 0.0
    assert s_norm(SolutionTriple.constant(d, 2.5), 1.0) == 2.5


def test_s_norm_is_a_norm():
    rng = np.random.default_rng(13)
    for _ in range(20):
        d = random_domain(rng)
        first, second = (
            SolutionTriple(**{name: GridFunction(domain=d, values=rng.normal(size=d.shape)) for name in ("u", "u_d1", "u_d2")})
            for _ in range(2)
        )
        lam = float(rng.uniform(0.1, 2.0))

        assert s_norm(first * 2.0, lam) == 2.0 * s_norm(first, lam)
        assert s_norm(first * -3.0, lam) == pytest.approx(3.0 * s_norm(first, lam), rel=1e-12)
        assert s_norm(first + second, lam) <= (s_norm(first, lam) + s_norm(second, lam)) * (1 + 1e-12)


def test_s_norm_dominates_every_point():
    rng = np.random.default_rng(17)
    d = random_domain(rng)
    s = differentiate(GridFunction(domain=d, values=rng.normal(size=d.shape)))
    n = s_norm(s, 0.8)

    assert np.all(w_seminorm_table(s) <= n * weight_table(d, 0.8) * (1 + 1e-12))


def test_log_weights_match_the_weight_table():
    rng = np.random.default_rng(19)
    d = random_domain(rng)

    assert np.allclose(log_weight_table(d, 0.6), np.log(weight_table(d, 0.6)), rtol=1e-12, atol=1e-12)


def test_log_weights_stay_finite_where_the_weight_overflows():
    d = lattice(61, 61)
    with np.errstate(over="ignore"):
        e = weight_table(d, 1000.0)
    logs = log_weight_table(d, 1000.0)

    assert np.isinf(e[-1, -1, 0])
    assert np.all(np.isfinite(logs))
    assert logs[-1, -1, 0] == pytest.approx(120 * np.log(1001.0), rel=1e-12)


def test_decay_matrix_examples():
    a = decay_matrix(IntegerScale(0, 2), 1.0)

    assert a == pytest.approx(np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.25, 0.5, 0.0]]), rel=1e-15)
    assert np.all(np.isfinite(decay_matrix(IntegerScale(0, 500), 1e6)))


def test_s_norm_with_an_overflowing_weight():
    d = lattice(61, 61)
    values = np.zeros(d.shape)
    values[1, 1, 0] = 1001.0 ** 2
    s = SolutionTriple(u=GridFunction(domain=d, values=values), u_d1=GridFunction.zeros(d), u_d2=GridFunction.zeros(d))

    assert s_norm(s, 1000.0) == pytest.approx(1.0, rel=1e-12)
    assert s_norm(SolutionTriple.constant(d, 2.5), 1000.0) == 2.5


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(21)
    d = random_domain(rng)
    g = GridFunction(domain=d, values=rng.normal(size=d.shape) * 1e3)
    path = write_csv(g, tmp_path / "g.csv")

    assert np.array_equal(read_csv(path, d).values, g.values)
    assert to_csv_rows(g)[0] == ["x", "y", "z", "value"]
    assert len(to_csv_rows(g)) == 1 + g.values.size


def test_read_csv_reports_missing_points(tmp_path):
    d = lattice(2, 2)
    path = tmp_path / "short.csv"
    path.write_text("x,y,z,value\n0,0,0,1.0\n")

    with pytest.raises(ValueError):
        read_csv(path, d)

import math
import zlib

import numpy as np
import numpy.testing as npt
import pytest

from globinv.errors import DimensionMismatch
from globinv.maps import (
    SmoothMap,
    evaluate,
    fd_check,
    jacobian,
    make_builtin,
    second_derivative,
)
from globinv.numerics import sigma_min

CORPUS = [("identity", 1), ("identity", 3), ("linear", 2), ("linear", 5), ("sinperturb", 1),
          ("sinperturb", 3), ("cyclosin", 3), ("cyclosin", 5), ("shear2", 2), ("expc", 2)]


def test_expc_value_at_origin():
    npt.assert_array_equal(evaluate(make_builtin("expc"), (0.0, 0.0)), [1.0, 0.0])


def test_linear_default():
    npt.assert_array_equal(evaluate(make_builtin("linear", 2), (1.0, 3.0)), [5.0, 3.0])


def test_sinperturb_jacobian_at_zero():
    npt.assert_array_equal(jacobian(make_builtin("sinperturb:0.5", 1), [0.0]), [[1.5]])


def test_expc_jacobian():
    expc = make_builtin("expc")
    npt.assert_array_equal(jacobian(expc, (0.0, 0.0)), np.eye(2))
    npt.assert_allclose(jacobian(expc, (1.0, 0.0)), math.e * np.eye(2), atol=1e-15)


def test_shear2_jacobian():
    npt.assert_array_equal(jacobian(make_builtin("shear2"), (3.0, 7.0)), [[1, 0], [6, 1]])


def test_linear_second_derivative_zero():
    assert not np.any(second_derivative(make_builtin("linear", 3), (1.0, -2.0, 0.5)))


def test_shear2_second_derivative():
    h = second_derivative(make_builtin("shear2"), (-4.0, 2.0))
    expected = np.zeros((2, 2, 2))
    expected[1, 0, 0] = 2.0
    npt.assert_array_equal(h, expected)


def test_expc_second_derivative_at_origin():
    # d2/dx2 of e^x1 cos x2 and e^x1 sin x2, evaluated by hand at 0
    h = second_derivative(make_builtin("expc"), (0.0, 0.0))
    npt.assert_allclose(h[0], [[1, 0], [0, -1]], atol=1e-15)
    npt.assert_allclose(h[1], [[0, 1], [1, 0]], atol=1e-15)


def test_fd_check_identity():
    je, he = fd_check(make_builtin("identity", 3), [0.1, -2.0, 7.0], 1e-5)
    assert je <= 1e-9


def test_fd_check_sinperturb():
    je, _ = fd_check(make_builtin("sinperturb", 1), [0.3], 1e-5)
    assert je <= 1e-8


def test_fd_check_expc_hessian():
    _, he = fd_check(make_builtin("expc"), [0.5, 1.0], 1e-4)
    assert he <= 1e-5


@pytest.mark.parametrize("name,n", CORPUS)
def test_corpus_fd_consistency(name, n):
    fmap = make_builtin(name, n)
    rng = np.random.default_rng(zlib.crc32(f"{name}/{n}".encode()))
    for _ in range(100):
        x = rng.uniform(-5, 5, n)
        je, he = fd_check(fmap, x, 1e-4)
        assert je <= 1e-6
        assert he <= 1e-4


@pytest.mark.parametrize("name,n", CORPUS)
def test_corpus_hessian_exactly_symmetric(name, n):
    fmap = make_builtin(name, n)
    rng = np.random.default_rng(1)
    for _ in range(20):
        h = second_derivative(fmap, rng.uniform(-5, 5, n))
        npt.assert_array_equal(h, np.swapaxes(h, 1, 2))


@pytest.mark.parametrize("n", [1, 2, 4])
def test_sinperturb_sigma_min_bound(n):
    fmap = make_builtin("sinperturb:0.5", n)
    rng = np.random.default_rng(n)
    for _ in range(100):
        assert sigma_min(jacobian(fmap, rng.uniform(-10, 10, n))) >= 0.5 - 1e-15


@pytest.mark.parametrize("n", [2, 3, 5])
def test_cyclosin_sigma_min_bound(n):
    fmap = make_builtin("cyclosin", n)
    rng = np.random.default_rng(n)
    for _ in range(100):
        assert sigma_min(jacobian(fmap, rng.uniform(-10, 10, n))) >= 0.6 - 1e-12


def test_expc_sigma_min_is_exp_x1():
    expc = make_builtin("expc")
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.uniform(-5, 5, 2)
        assert abs(sigma_min(jacobian(expc, x)) - math.exp(x[0])) <= 1e-10 * max(1, math.exp(x[0]))


def test_cyclosin_one_dimensional_wraps_to_self():
    a = make_builtin("cyclosin:0.4", 1)
    b = make_builtin("sinperturb:0.4", 1)
    for x in (-3.0, 0.2, 5.0):
        npt.assert_allclose(evaluate(a, [x]), evaluate(b, [x]))
        npt.assert_allclose(jacobian(a, [x]), jacobian(b, [x]))
        npt.assert_allclose(second_derivative(a, [x]), second_derivative(b, [x]))


def test_linear_custom_matrix():
    fmap = make_builtin("linear", 2, a=[[0.0, 1.0], [-1.0, 0.0]], b=[1.0, 1.0])
    npt.assert_array_equal(evaluate(fmap, (2.0, 3.0)), [4.0, -1.0])
    with pytest.raises(ValueError):
        make_builtin("linear", 2, a=[[1.0, 1.0], [1.0, 1.0]])


@pytest.mark.parametrize("spec", ["shear2", "expc"])
def test_two_dimensional_only(spec):
    with pytest.raises(DimensionMismatch):
        make_builtin(spec, 3)


@pytest.mark.parametrize("spec", ["sinperturb:1.0", "cyclosin:-1.5", "nosuchmap", "shear2:0.1"])
def test_bad_builtin_specs(spec):
    with pytest.raises(ValueError):
        make_builtin(spec, 2)


def test_builtin_parameter_in_name():
    assert make_builtin("sinperturb:0.25", 2).params["alpha"] == 0.25


def test_wrong_point_length():
    with pytest.raises(DimensionMismatch):
        jacobian(make_builtin("identity", 2), [1.0, 2.0, 3.0])


def test_c2_contract_enforced():
    with pytest.raises(TypeError):
        SmoothMap(1, lambda x: x, lambda x: np.eye(1), None)


def test_maps_are_immutable():
    fmap = make_builtin("identity", 2)
    with pytest.raises(AttributeError):
        fmap.dim = 3

import numpy as np
import pytest

from rkbsnet.candidates import BoxSpec, sample
from rkbsnet.kernel import (
    Dataset,
    InputError,
    WeightFn,
    feature_matrix,
    kernel_eval,
    rank_check,
    rho,
    vec,
)
from rkbsnet.network import NetworkSpec, forward, param_dim


def test_rho_values():
    w = WeightFn()
    assert rho(w, np.zeros(5)) == 1.0
    assert rho(w, np.array([1.0, 0.0])) == pytest.approx(np.exp(-1.0), rel=1e-15)
    theta = np.array([0.3, -0.4, 0.1])
    assert rho(w, 2 * theta) < rho(w, theta)


def test_rho_rejects_nonfinite():
    with pytest.raises(InputError):
        rho(WeightFn(), np.array([np.nan, 0.0]))


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightFn(alpha=0.0)
    with pytest.raises(ValueError):
        WeightFn(kind="laplace")


def test_zero_parameters_give_zero_kernel():
    spec = NetworkSpec(2, 2, (3,), "sigmoid")
    # sigmoid(0) = 1/2 but the zero output layer still maps it to 0
    np.testing.assert_array_equal(kernel_eval(spec, WeightFn(), [0.4, 0.2], np.zeros(param_dim(spec))), 0.0)


def test_kernel_factorizes():
    rng = np.random.default_rng(0)
    spec = NetworkSpec(2, 2, (3,), "relu")
    w = WeightFn(alpha=0.5)
    for _ in range(5):
        theta = rng.normal(size=param_dim(spec))
        x = rng.normal(size=2)
        np.testing.assert_allclose(kernel_eval(spec, w, x, theta) / rho(w, theta),
                                   forward(spec, theta, x), rtol=1e-15)


def test_kernel_frozen_value():
    # oracle: hand-built max(W1 x + b1, 0) network times exp(-|theta|^2)
    spec = NetworkSpec(2, 1, (3,), "relu")
    theta = np.linspace(-0.5, 0.7, 13)
    value = kernel_eval(spec, WeightFn(), [0.3, -0.2], theta)[0]
    assert value == pytest.approx(0.13501809393560138, rel=1e-14)


def test_feature_matrix_layout():
    spec = NetworkSpec(1, 2, (2,), "relu")
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, size=(4, 1))
    cands = sample(BoxSpec.cube(param_dim(spec), 1.0), "random", count=50, seed=1)
    A = feature_matrix(spec, WeightFn(), X, cands)
    assert A.shape == (8, 50)
    # 20 random entries against pointwise recomputation, row k*m + j
    for _ in range(20):
        k, j, p = rng.integers(0, 2), rng.integers(0, 4), rng.integers(0, 50)
        expected = kernel_eval(spec, WeightFn(), X[j], cands.points[p])[k]
        assert A.entries[k * 4 + j, p] == pytest.approx(expected, rel=1e-14, abs=1e-300)


def test_feature_matrix_single_entry():
    spec = NetworkSpec(1, 1, (), "relu")
    A = feature_matrix(spec, WeightFn(), [[0.5]], np.array([[2.0, 1.0]]))
    assert A.shape == (1, 1)
    assert A.entries[0, 0] == kernel_eval(spec, WeightFn(), [0.5], [2.0, 1.0])[0]


def test_feature_matrix_rejects_duplicates():
    spec = NetworkSpec(1, 1, (2,))
    with pytest.raises(InputError):
        feature_matrix(spec, WeightFn(), [[0.1], [0.1]], np.zeros((3, param_dim(spec))))


def test_vec_order_matches_rows():
    data = Dataset(np.array([[0.0], [1.0], [2.0]]), np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]]))
    np.testing.assert_array_equal(vec(data.targets()), [1.0, 2.0, 3.0, 10.0, 20.0, 30.0])


def test_rank_check_identity_and_duplicate():
    assert rank_check(np.eye(2)) == (2, False)
    rank, flag = rank_check(np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]))
    assert rank == 1 and flag


def test_rank_check_against_svd():
    rng = np.random.default_rng(2)
    spec = NetworkSpec(2, 2, (2,), "sigmoid")
    X = rng.uniform(-1, 1, size=(3, 2))
    cands = sample(BoxSpec.cube(param_dim(spec), 1.0), "random", count=300, seed=2)
    A = feature_matrix(spec, WeightFn(), X, cands)
    sv = np.linalg.svd(A.entries, compute_uv=False)
    oracle = int(np.sum(sv > 1e-10 * sv[0]))
    rank, flag = rank_check(A)
    assert rank == oracle == 6
    assert not flag

import numpy as np
import pytest

from rkbsnet.kernel import WeightFn, kernel_eval
from rkbsnet.measure import Atom, DiscreteMeasure, f_mu_eval, prune, tv_norm
from rkbsnet.network import NetworkSpec, ShapeError, param_dim

SPEC = NetworkSpec(2, 2, (3,), "sigmoid")
D = param_dim(SPEC)


def theta(seed):
    return np.random.default_rng(seed).normal(size=D)


def test_tv_norm():
    assert tv_norm(DiscreteMeasure(SPEC)) == 0.0
    mu = DiscreteMeasure(SPEC, WeightFn(), (Atom(theta(0), 2.0), Atom(theta(1), -3.0)))
    assert tv_norm(mu) == 5.0
    assert tv_norm(mu.scaled(2.0)) == 10.0


def test_atom_shape_checked():
    with pytest.raises(ShapeError):
        DiscreteMeasure(SPEC, WeightFn(), (Atom(np.zeros(3), 1.0),))


def test_atom_is_immutable():
    a = Atom(theta(0), 1.0)
    with pytest.raises(ValueError):
        a.theta[0] = 5.0


def test_f_mu_single_and_empty():
    x = np.array([0.2, -0.7])
    th = theta(3)
    mu = DiscreteMeasure(SPEC, WeightFn(), (Atom(th, 1.0),))
    np.testing.assert_array_equal(f_mu_eval(mu, x), kernel_eval(SPEC, WeightFn(), x, th))
    np.testing.assert_array_equal(f_mu_eval(DiscreteMeasure(SPEC), x), np.zeros(2))


def test_f_mu_explicit_sum():
    rng = np.random.default_rng(4)
    thetas = rng.normal(size=(5, D))
    coeffs = rng.normal(size=5)
    mu = DiscreteMeasure.from_arrays(SPEC, WeightFn(), thetas, coeffs)
    x = rng.normal(size=2)
    total = np.zeros(2)
    for th, c in zip(thetas, coeffs):
        total += c * kernel_eval(SPEC, WeightFn(), x, th)
    np.testing.assert_allclose(f_mu_eval(mu, x), total, rtol=1e-14, atol=1e-16)


def test_prune_cases():
    th = theta(5)
    tiny = DiscreteMeasure(SPEC, WeightFn(), (Atom(th, 1e-12),))
    assert len(prune(tiny, 1e-8)) == 0
    merged = prune(DiscreteMeasure(SPEC, WeightFn(), (Atom(th, 1.0), Atom(th, 2.0))))
    assert len(merged) == 1 and merged.atoms[0].coeff == 3.0
    cancel = prune(DiscreteMeasure(SPEC, WeightFn(), (Atom(th, 1.0), Atom(th, -1.0))))
    assert len(cancel) == 0


def test_prune_separates_atoms():
    rng = np.random.default_rng(6)
    base = rng.normal(size=(4, D))
    jitter = base[[0, 1, 0, 2, 3, 1]] + rng.uniform(-1e-10, 1e-10, size=(6, D))
    mu = prune(DiscreteMeasure.from_arrays(SPEC, WeightFn(), jitter, np.ones(6)), merge_tol=1e-9)
    assert len(mu) == 4
    th = mu.thetas
    for a in range(len(mu)):
        for b in range(a + 1, len(mu)):
            assert np.max(np.abs(th[a] - th[b])) > 1e-9

"""Acceptance gate: one test per criterion, summarized at the end of the run."""

import json
import time

import numpy as np
import pytest

from rkbsnet.candidates import BoxSpec
from rkbsnet.cli import main
from rkbsnet.formats import write_dataset
from rkbsnet.kernel import Dataset, WeightFn, kernel_eval, vec
from rkbsnet.mni import argmax_set, solve_mni
from rkbsnet.network import NetworkSpec, forward, merge, param_dim, random_params
from rkbsnet.regularized import (
    RegProblem,
    kkt_check,
    lambda_max,
    lambda_path,
    solve_regularized,
)
from rkbsnet.trainer import TrainConfig, grad_check, train_expansion

from conftest import make_instance

SEEDS = range(20)


@pytest.fixture(scope="module")
def solved():
    """The 20 seeded interpolation instances, solved once."""
    start = time.perf_counter()
    out = []
    for seed in SEEDS:
        spec, cands, data, A = make_instance(seed)
        Y = data.targets()
        mu, cert, rep = solve_mni(A, Y, cands)
        out.append((spec, cands, data, A, Y, mu, cert, rep))
    elapsed = time.perf_counter() - start
    return out, elapsed


def test_instance_coverage(solved):
    instances, _ = solved
    shapes = {(s.input_dim, s.output_dim) for s, *_ in instances}
    assert shapes == {(1, 1), (1, 2), (2, 1), (2, 2)}
    assert {d.m for _, _, d, *_ in instances} == {1, 2, 3, 4}
    assert all(100 <= len(c) <= 500 for _, c, *_ in instances)


@pytest.mark.criterion(1, "strong duality |tv - C*| <= 1e-8 max(1, C*) on 20 instances, < 30 s")
def test_strong_duality(solved):
    instances, elapsed = solved
    for *_, mu, cert, rep in instances:
        assert abs(rep.tv - cert.cstar) <= 1e-8 * max(1.0, cert.cstar)
    assert elapsed < 30.0


@pytest.mark.criterion(2, "support in argmax, sign alignment, atom bound t*m, coefficient sum")
def test_representer_structure(solved):
    instances, _ = solved
    for spec, cands, data, A, Y, mu, cert, rep in instances:
        members = set(argmax_set(cert, 1e-6).tolist())
        for atom in mu.atoms:
            if abs(atom.coeff) <= 1e-8:
                continue
            p = int(np.argmin(np.max(np.abs(cands.points - atom.theta), axis=1)))
            assert p in members
            assert np.sign(atom.coeff) == np.sign(cert.ghat_values[p])
        assert len(mu) <= spec.output_dim * data.m
        assert abs(np.sum(np.abs(mu.coeffs)) - cert.ghat_norm) <= 1e-8 * max(1.0, cert.cstar)


@pytest.mark.criterion(3, "interpolation residual <= 1e-8 max(1, |Y|_inf)")
def test_interpolation(solved):
    instances, _ = solved
    for spec, cands, data, A, Y, mu, cert, rep in instances:
        c = np.zeros(len(cands))
        for atom in mu.atoms:
            c[int(np.argmin(np.max(np.abs(cands.points - atom.theta), axis=1)))] += atom.coeff
        residual = np.max(np.abs(A.entries @ c - vec(Y)))
        assert residual <= 1e-8 * max(1.0, np.max(np.abs(Y)))


@pytest.mark.criterion(4, "merged network equals the linear combination to 1e-12, widths n*m_j")
@pytest.mark.parametrize("act", ["relu", "sigmoid"])
def test_merge(act):
    rng = np.random.default_rng(40)
    spec = NetworkSpec(2, 2, (3, 4), act)
    for n in (1, 2, 3):
        params = [random_params(spec, rng) for _ in range(n)]
        c = rng.normal(size=n)
        merged_spec, merged = merge(spec, c, params)
        assert merged_spec.hidden == (3 * n, 4 * n)
        X = rng.uniform(-1, 1, size=(100, 2))
        expected = sum(ci * forward(spec, p, X) for ci, p in zip(c, params))
        err = np.max(np.abs(forward(merged_spec, merged, X) - expected))
        assert err <= 1e-12 * max(1.0, np.max(np.abs(expected)))


@pytest.mark.criterion(5, "single-point closed form and single-atom recovery to 1e-10")
@pytest.mark.parametrize("seed", [50, 51, 52, 53])
def test_single_point_oracle(seed):
    spec, cands, data, A = make_instance(seed, t=1, m=1)
    y = data.Y[0, 0]
    row = A.entries[0]
    mu, cert, _ = solve_mni(A, data.targets(), cands)
    closed = abs(y) / np.max(np.abs(row))
    brute = min(abs(y / a) for a in row if a != 0.0)
    assert abs(cert.cstar - closed) <= 1e-10 * max(1.0, closed)
    assert abs(cert.cstar - brute) <= 1e-10 * max(1.0, brute)
    p = int(np.argmax(np.abs(row)))
    assert len(mu) == 1
    assert np.array_equal(mu.atoms[0].theta, cands.points[p])
    assert abs(mu.atoms[0].coeff - y / row[p]) <= 1e-10 * max(1.0, abs(y / row[p]))


@pytest.mark.criterion(6, "KKT, zero threshold, MNI consistency, monotone path, small-lambda limit")
def test_regularization(small_relu):
    spec, cands, data, A = small_relu
    Y = data.targets()
    for lam in (0.1, 0.01, 1e-3):
        mu, rep = solve_regularized(RegProblem(A, Y, lam))
        assert rep.kkt_max_violation <= 1e-6 * max(1.0, lam)
        assert rep.mni_consistency_gap <= 1e-6 * max(1.0, rep.tv)
    thr = lambda_max(A, Y)
    above, _ = solve_regularized(RegProblem(A, Y, thr * (1 + 1e-3)))
    below, _ = solve_regularized(RegProblem(A, Y, thr * (1 - 1e-3)))
    assert len(above) == 0 and len(below) > 0
    assert kkt_check(np.zeros(A.shape[1]), A, Y, thr) == 0.0
    rows = lambda_path(A, Y, np.geomspace(thr, 1e-6, 10))
    tvs = [r.tv for r in rows]
    assert all(b >= a - 1e-9 for a, b in zip(tvs, tvs[1:]))
    _, cert, _ = solve_mni(A, Y, cands)
    assert abs(tvs[-1] - cert.cstar) <= 1e-3


@pytest.mark.criterion(7, "sigmoid gradient check <= 1e-5, monotone losses, >= 10x reduction")
def test_trainer():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(20, 2))
    data = Dataset(X, np.sin(2 * X[:, 0]) + 0.5 * X[:, 1] ** 2)
    spec = NetworkSpec(2, 1, (3,), "sigmoid")
    cfg = TrainConfig(BoxSpec.cube(param_dim(spec), 1.0), atom_count=4, learning_rate=0.05,
                      max_iters=1000, seed=0)
    _, trace = train_expansion(spec, data, cfg)
    assert all(b <= a for a, b in zip(trace.losses, trace.losses[1:]))
    assert trace.losses[0] >= 10.0 * trace.losses[-1]
    assert grad_check(spec, data, trace.betas, trace.thetas, 1e-5) <= 1e-5
    init = np.random.default_rng(1)
    assert grad_check(spec, data, init.normal(size=4), init.uniform(-1, 1, (4, param_dim(spec)))) <= 1e-5


@pytest.mark.criterion(8, "byte-identical reruns, refinement C* trace non-increasing within 1e-10")
def test_determinism(tmp_path):
    rng = np.random.default_rng(8)
    write_dataset(tmp_path / "data.csv", Dataset(rng.uniform(-1, 1, (3, 2)), rng.uniform(-1, 1, (3, 1))))
    cfg = {
        "network": {"input_dim": 2, "output_dim": 1, "hidden": [2], "activation": "sigmoid"},
        "candidates": {"bound": 1.0, "count": 150, "seed": 8, "rounds": 3},
        "train": {"max_iters": 20},
        "dataset": "data.csv",
    }
    (tmp_path / "run.json").write_text(json.dumps(cfg))
    for command in ("mni", "reg", "path", "train", "sample"):
        dirs = [tmp_path / f"{command}{i}" for i in range(2)]
        for d in dirs:
            assert main([command, "--config", str(tmp_path / "run.json"), "--out", str(d)]) == 0
        for f in sorted(dirs[0].iterdir()):
            assert f.read_bytes() == (dirs[1] / f.name).read_bytes(), f.name
    trace = json.loads((tmp_path / "mni0" / "report.json").read_text())["trace"]
    cstars = [row["cstar"] for row in trace]
    assert len(cstars) == 4
    assert all(b <= a + 1e-10 for a, b in zip(cstars, cstars[1:]))


@pytest.mark.criterion(9, "|K(x, theta)| <= 1e-20 for |theta| >= 10, alpha = 1, both activations")
@pytest.mark.parametrize("act", ["relu", "sigmoid"])
def test_kernel_decay(act):
    rng = np.random.default_rng(9)
    spec = NetworkSpec(2, 2, (3, 3), act)
    d = param_dim(spec)
    worst = 0.0
    for _ in range(500):
        direction = rng.normal(size=d)
        theta = direction / np.linalg.norm(direction) * rng.uniform(10.0, 40.0)
        x = rng.uniform(-1, 1, size=2)
        worst = max(worst, float(np.max(np.abs(kernel_eval(spec, WeightFn(alpha=1.0), x, theta)))))
    assert worst <= 1e-20

import itertools

import numpy as np
import pytest

from rkbsnet.kernel import vec
from rkbsnet.measure import Atom, DiscreteMeasure
from rkbsnet.mni import solve_dual, solve_mni
from rkbsnet.regularized import (
    RegProblem,
    kkt_check,
    lambda_max,
    lambda_path,
    mni_consistency,
    solve_regularized,
)

from conftest import make_instance


def test_zero_threshold_both_sides(small_relu):
    spec, cands, data, A = small_relu
    Y = data.targets()
    thr = lambda_max(A, Y)
    above, rep = solve_regularized(RegProblem(A, Y, thr * (1 + 1e-3)))
    assert len(above) == 0 and rep.tv == 0.0
    below, _ = solve_regularized(RegProblem(A, Y, thr * (1 - 1e-3)))
    assert len(below) > 0
    assert kkt_check(np.zeros(len(cands)), A, Y, thr) == 0.0


def test_kkt_at_optimum_and_perturbed(small_relu):
    spec, cands, data, A = small_relu
    Y = data.targets()
    lam = 0.01
    mu, rep = solve_regularized(RegProblem(A, Y, lam))
    assert rep.converged
    assert rep.kkt_max_violation <= 1e-6 * max(1.0, lam)
    assert all(b <= a + 1e-12 * max(1.0, a) for a, b in zip(rep.objective_trace, rep.objective_trace[1:]))
    c = np.zeros(len(cands))
    for atom in mu.atoms:
        c[int(np.argmin(np.max(np.abs(cands.points - atom.theta), axis=1)))] = atom.coeff
    p = np.flatnonzero(c)[0]
    c[p] += 0.1
    assert kkt_check(c, A, Y, lam) > 0.0


def test_mni_consistency(small_relu):
    spec, cands, data, A = small_relu
    Y = data.targets()
    mu, rep = solve_regularized(RegProblem(A, Y, 0.1))
    assert rep.mni_consistency_gap <= 1e-6 * max(1.0, rep.tv)
    assert mni_consistency(DiscreteMeasure(spec), A) == (0.0, True)
    # dropping atoms keeps the remainder certified by the same g, so the
    # inconsistency is built by adding an atom far from the argmax set
    assert mni_consistency(DiscreteMeasure(mu.spec, mu.weight, mu.atoms[1:]), A)[0] <= 1e-9
    cert = solve_dual(A, Y)
    worst = int(np.argmin(np.abs(cert.ghat_values)))
    padded = DiscreteMeasure(mu.spec, mu.weight, (*mu.atoms, Atom(cands.points[worst], 1.0)))
    gap, trivial = mni_consistency(padded, A)
    assert gap > 1e-3 and not trivial


def test_small_lambda_approaches_mni(small_relu):
    spec, cands, data, A = small_relu
    Y = data.targets()
    _, _, mrep = solve_mni(A, Y, cands)
    _, rep = solve_regularized(RegProblem(A, Y, 1e-6))
    assert abs(rep.tv - mrep.cstar) <= 1e-3


def vertex_minimum(M, y):
    """Minimum of c^T z over {z >= 0, A_eq z = y} by enumerating every basis."""
    n, P = M.shape
    I = np.eye(n)
    A_eq = np.hstack([M, -M, I, -I])
    return A_eq, lambda cost: min(
        float(cost[list(b)] @ np.linalg.solve(A_eq[:, b], y))
        for b in itertools.combinations(range(A_eq.shape[1]), n)
        if abs(np.linalg.det(A_eq[:, b])) > 1e-12
        and np.all(np.linalg.solve(A_eq[:, b], y) >= -1e-12)
    )


def test_absolute_loss_vertex_enumeration():
    spec, cands, data, A = make_instance(21, t=1, m=2, P=20)
    Y = data.targets()
    lam = 0.05
    mu, rep = solve_regularized(RegProblem(A, Y, lam, "absolute"))
    A_eq, minimize = vertex_minimum(A.entries, vec(Y))
    P = A.entries.shape[1]
    cost = np.concatenate([np.full(2 * P, lam), np.ones(4)])
    assert rep.objective == pytest.approx(minimize(cost), rel=1e-9, abs=1e-12)


def test_path_single_overregularized(small_relu):
    spec, cands, data, A = small_relu
    Y = data.targets()
    rows = lambda_path(A, Y, [10 * lambda_max(A, Y)])
    assert len(rows) == 1 and rows[0].tv == 0.0


def test_path_monotone_and_matches_cold(small_relu):
    spec, cands, data, A = small_relu
    Y = data.targets()
    lams = np.geomspace(lambda_max(A, Y), 1e-6, 9)
    rows = lambda_path(A, Y, lams)
    tvs = [r.tv for r in rows]
    assert all(b >= a - 1e-9 for a, b in zip(tvs, tvs[1:]))
    for r in rows:
        assert r.kkt_max_violation <= 1e-6 * max(1.0, r.lam)
    for r in rows[::3]:
        _, cold = solve_regularized(RegProblem(A, Y, r.lam))
        assert cold.tv == pytest.approx(r.tv, rel=1e-6, abs=1e-9)
    _, _, mrep = solve_mni(A, Y, cands)
    assert abs(rows[-1].tv - mrep.cstar) <= 1e-3


def test_path_validation(small_relu):
    spec, cands, data, A = small_relu
    with pytest.raises(ValueError):
        lambda_path(A, data.targets(), [0.1, 0.2])
    with pytest.raises(ValueError):
        RegProblem(A, data.targets(), 0.0)
    with pytest.raises(ValueError):
        RegProblem(A, data.targets(), 0.1, "huber")

"""Loss plus lambda times total variation, over measures on the candidate set.

With the feature matrix A (rows k*m + j, columns = candidates) and targets
y = vec(Y), the problems solved are

    square:    1/2 |A c - y|_2^2 + lambda |c|_1     (cyclic coordinate descent)
    absolute:      |A c - y|_1   + lambda |c|_1     (linear program)

Both are solved on a rescaled copy of the data (A / max|A|, y / max|y|) and
mapped back, so the convergence tolerance is independent of the raw scale of
the kernel values. Square-loss solves follow a geometric continuation in
lambda from the zero-solution threshold (or from the previous point of a
path), running cyclic coordinate descent to convergence at every stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import FeatureMatrix, WeightFn, vec
from .lp import LinearProgram, solve_lp
from .measure import COEFF_TOL, MERGE_TOL, Atom, DiscreteMeasure, f_mu_eval, prune, tv_norm
from .mni import _matrix, _scales, solve_dual

LOSSES = ("square", "absolute")


class ConvergenceError(RuntimeError):
    pass


@dataclass
class RegProblem:
    A: FeatureMatrix
    Y: np.ndarray
    lam: float
    loss: str = "square"

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        if not self.lam > 0:
            raise ValueError("the regularization parameter must be positive")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if vec(self.Y).size != _matrix(self.A).shape[0]:
            raise ValueError("targets do not match the feature matrix rows")


@dataclass
class RegOptions:
    tol: float = 1e-10
    max_sweeps: int = 100_000
    coeff_tol: float = COEFF_TOL
    merge_tol: float = MERGE_TOL
    lp_tol: float = 1e-9
    check_consistency: bool = True


@dataclass
class RegReport:
    lam: float
    loss: str
    loss_value: float
    tv: float
    objective: float
    kkt_max_violation: float
    mni_consistency_gap: float | None = None
    trivial: bool = False
    converged: bool = True
    sweeps: int = 0
    predictions: np.ndarray | None = None
    objective_trace: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "loss": self.loss,
            "loss_value": self.loss_value,
            "tv": self.tv,
            "objective": self.objective,
            "kkt_max_violation": self.kkt_max_violation,
            "mni_consistency_gap": self.mni_consistency_gap,
            "trivial": self.trivial,
            "converged": self.converged,
            "sweeps": self.sweeps,
        }


def loss_value(c, A, Y, loss: str) -> float:
    r = _matrix(A) @ c - vec(Y)
    if loss == "square":
        return 0.5 * float(r @ r)
    return float(np.sum(np.abs(r)))


def lambda_max(A, Y) -> float:
    """Smallest lambda whose square-loss solution is exactly zero."""
    return float(np.max(np.abs(_matrix(A).T @ vec(Y))))


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _cd_square(M, y, lam, c0, tol, max_sweeps):
    """Cyclic coordinate descent on 1/2|Mc - y|^2 + lam |c|_1.

    Sweeps alternate between the full index range and the current nonzero
    set (in increasing index order); convergence is declared only after a
    full sweep whose largest coordinate change is at most ``tol``.
    """
    P = M.shape[1]
    cols = [np.ascontiguousarray(M[:, p]) for p in range(P)]
    sq = np.einsum("ij,ij->j", M, M)
    c = c0.copy()
    r = y - M @ c
    trace = [0.5 * float(r @ r) + lam * float(np.sum(np.abs(c)))]
    full = np.arange(P)
    sweeps = 0
    while sweeps < max_sweeps:
        for active_only in (False, True):
            while sweeps < max_sweeps:
                idx = np.flatnonzero(c) if active_only else full
                biggest = 0.0
                for p in idx:
                    if sq[p] == 0.0:
                        continue
                    old = c[p]
                    z = float(cols[p] @ r) + sq[p] * old
                    new = _soft(z, lam) / sq[p]
                    if new != old:
                        r -= (new - old) * cols[p]
                        c[p] = new
                        biggest = max(biggest, abs(new - old))
                sweeps += 1
                obj = 0.5 * float(r @ r) + lam * float(np.sum(np.abs(c)))
                if obj > trace[-1] + 1e-12 * max(1.0, abs(trace[-1])):
                    raise ConvergenceError("coordinate descent objective increased")
                trace.append(obj)
                if not active_only:
                    if biggest <= tol:
                        return c, True, sweeps, trace
                    break
                if biggest <= tol:
                    break
    return c, False, sweeps, trace


def _lp_absolute(M, y, lam, tol):
    n, P = M.shape
    I = np.eye(n)
    A_eq = np.hstack([M, -M, I, -I])
    cost = np.concatenate([np.full(2 * P, lam), np.ones(2 * n)])
    lp = LinearProgram(cost, A_eq, y)
    sol = solve_lp(lp, tol=tol)
    if not sol.optimal:
        raise RuntimeError(f"absolute-loss program reported status {sol.status}")
    gap = abs(sol.objective - sol.dual_objective(lp, tol))
    return sol.x[:P] - sol.x[P:2 * P], gap


def kkt_check(c, A, Y, lam: float, loss: str = "square", tol: float = 0.0) -> float:
    """Largest violation of the square-loss optimality conditions at ``c``.

    With r = y - A c the conditions are |A^T r|_inf <= lam everywhere and
    (A^T r)_p = lam sign(c_p) on the support; coefficients with |c_p| <= tol
    count as zero.
    """
    if loss != "square":
        raise ValueError("kkt_check covers the square loss only")
    M = _matrix(A)
    c = np.asarray(c, dtype=float)
    g = M.T @ (vec(Y) - M @ c)
    viol = max(0.0, float(np.max(np.abs(g))) - lam)
    support = np.abs(c) > tol
    if np.any(support):
        viol = max(viol, float(np.max(np.abs(g[support] - lam * np.sign(c[support])))))
    return viol


def _coefficients(mu: DiscreteMeasure, A) -> np.ndarray:
    points = np.asarray(getattr(A.candidates, "points", A.candidates), dtype=float)
    c = np.zeros(points.shape[0])
    for atom in mu.atoms:
        p = int(np.argmin(np.max(np.abs(points - atom.theta), axis=1)))
        c[p] += atom.coeff
    return c


def _measure(A, c, opts) -> DiscreteMeasure:
    points = np.asarray(getattr(A.candidates, "points", A.candidates), dtype=float)
    raw = DiscreteMeasure(A.spec, A.weight or WeightFn(), tuple(
        Atom(points[p], c[p]) for p in np.flatnonzero(c)
    ))
    return prune(raw, opts.coeff_tol, opts.merge_tol)


def mni_consistency(mu: DiscreteMeasure, A: FeatureMatrix, cands=None) -> tuple[float, bool]:
    """|tv(mu) - C*(Z)| where Z are the predictions of ``mu`` at the data points.

    A regularized solution must also be a minimum norm interpolant of its own
    predictions, so the gap vanishes at optimality. Returns ``(gap, trivial)``;
    a measure with zero predictions gives ``(0.0, True)``.
    """
    Z = f_mu_eval(mu, A.X).T
    if not np.any(Z):
        return 0.0, True
    M = _matrix(A)
    if cands is not None:
        from .kernel import feature_matrix
        M = feature_matrix(A.spec, A.weight, A.X, cands).entries
    cert = solve_dual(M, Z)
    return abs(tv_norm(mu) - cert.cstar), False


def _continuation(lam_from: float, lam_to: float, per_decade: int = 5) -> np.ndarray:
    """Geometric lambda schedule ending exactly at ``lam_to``."""
    if lam_from <= lam_to:
        return np.array([lam_to])
    steps = int(np.ceil(np.log10(lam_from / lam_to) * per_decade))
    sched = np.geomspace(lam_from, lam_to, steps + 1)[1:]
    sched[-1] = lam_to
    return sched


def _solve_scaled(M, y, lam, loss, opts, warm=None, lam_prev=None):
    """Solve on rescaled data; square loss is continued down from ``lam_prev``.

    Without a warm start the schedule begins at the zero-solution threshold,
    where c = 0 is optimal.
    """
    a, eta = _scales(M, y)
    Ms, ys = M / a, y / eta
    if loss == "square":
        lam_s = lam / (a * eta)
        if warm is None:
            c = np.zeros(M.shape[1])
            start = float(np.max(np.abs(Ms.T @ ys)))
        else:
            c = warm * a / eta
            start = lam_s if lam_prev is None else lam_prev / (a * eta)
        sweeps, trace, converged = 0, [], True
        for stage in _continuation(start, lam_s):
            c, converged, n, stage_trace = _cd_square(Ms, ys, stage, c, opts.tol, opts.max_sweeps)
            sweeps += n
            if not converged:
                break
        trace = [v * eta * eta for v in stage_trace]
        lp_gap = None
    else:
        c, lp_gap = _lp_absolute(Ms, ys, lam / a, opts.lp_tol)
        converged, sweeps, trace = True, 0, []
        lp_gap *= eta
    return c * eta / a, converged, sweeps, trace, lp_gap


def solve_regularized(p: RegProblem, opts: RegOptions | None = None, warm_start=None):
    """Solve the regularized problem; returns ``(measure, report)``."""
    opts = opts or RegOptions()
    M = _matrix(p.A)
    y = vec(p.Y)
    c, converged, sweeps, trace, lp_gap = _solve_scaled(M, y, p.lam, p.loss, opts, warm_start)
    if not converged:
        raise ConvergenceError(
            f"coordinate descent did not converge in {opts.max_sweeps} sweeps"
        )
    mu = _measure(p.A, c, opts)
    c_kept = _coefficients(mu, p.A)
    loss = loss_value(c_kept, M, p.Y, p.loss)
    tv = tv_norm(mu)
    if p.loss == "square":
        kkt = kkt_check(c_kept, M, p.Y, p.lam)
    else:
        kkt = lp_gap
    Z = (M @ c_kept).reshape(np.shape(p.Y))
    trivial = not np.any(Z)
    gap = None
    if opts.check_consistency:
        gap, trivial = mni_consistency(mu, p.A)
    report = RegReport(p.lam, p.loss, loss, tv, loss + p.lam * tv, kkt, gap, trivial,
                       converged, sweeps, Z, trace)
    return mu, report


@dataclass
class PathRow:
    lam: float
    loss_value: float
    tv: float
    kkt_max_violation: float


def lambda_path(A: FeatureMatrix, Y, lambdas, loss: str = "square",
                opts: RegOptions | None = None) -> list[PathRow]:
    """Warm-started sweep over strictly decreasing positive lambdas."""
    lambdas = [float(v) for v in lambdas]
    if not lambdas or any(v <= 0 for v in lambdas):
        raise ValueError("lambdas must be positive")
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly decreasing")
    opts = opts or RegOptions(check_consistency=False)
    M = _matrix(A)
    y = vec(Y)
    rows = []
    warm, prev = None, None
    for lam in lambdas:
        c, converged, _, _, lp_gap = _solve_scaled(M, y, lam, loss, opts, warm, prev)
        if not converged:
            raise ConvergenceError(f"coordinate descent did not converge at lambda={lam}")
        warm, prev = c, lam
        kkt = kkt_check(c, M, Y, lam) if loss == "square" else lp_gap
        rows.append(PathRow(lam, loss_value(c, M, Y, loss), float(np.sum(np.abs(c))), kkt))
    return rows

"""Minimum norm interpolation over discrete measures on a candidate set.

Two linear programs are solved independently. The dual program

    max  <c, vec(Y)>   s.t.  |sum_{k,j} c_kj K_k(x_j, theta_p)| <= 1  for every p

yields the certificate g(theta) = C* sum c_kj K_k(x_j, theta) and the optimal
value C*. The primal program

    min  sum_p |c_p|   s.t.  A c = vec(Y)

yields a sparse interpolating measure. At optimality the two values coincide,
and every atom sits where |g| reaches its maximum with the sign of g.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import FeatureMatrix, WeightFn, rank_check, vec
from .lp import LinearProgram, solve_lp
from .measure import COEFF_TOL, MERGE_TOL, Atom, DiscreteMeasure, prune, tv_norm

ARGMAX_TOL = 1e-6


class RankDeficientError(RuntimeError):
    """The dual program is unbounded: the data functionals are dependent."""


class StructuralError(ValueError):
    """A measure atom does not correspond to any candidate."""


@dataclass
class DualCertificate:
    chat: np.ndarray  # t x m
    cstar: float
    ghat_values: np.ndarray
    ghat_norm: float

    def ghat(self, A) -> np.ndarray:
        """Certificate values on the columns of an arbitrary feature matrix."""
        M = np.asarray(getattr(A, "entries", A), dtype=float)
        return self.cstar * (vec(self.chat) @ M)


@dataclass
class MniOptions:
    argmax_tol: float = ARGMAX_TOL
    coeff_tol: float = COEFF_TOL
    merge_tol: float = MERGE_TOL
    lp_tol: float = 1e-9
    rank_tol: float = 1e-10
    check_tol: float = 1e-8
    force: bool = False


@dataclass
class MniReport:
    cstar: float
    tv: float
    duality_gap: float
    max_interp_residual: float
    support_in_argmax: bool
    sign_aligned: bool
    atom_count: int
    atom_bound: int
    coeff_sum_gap: float
    argmax_tol: float
    trivial: bool = False
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "cstar": self.cstar,
            "tv": self.tv,
            "duality_gap": self.duality_gap,
            "max_interp_residual": self.max_interp_residual,
            "support_in_argmax": self.support_in_argmax,
            "sign_aligned": self.sign_aligned,
            "atom_count": self.atom_count,
            "atom_bound": self.atom_bound,
            "coeff_sum_gap": self.coeff_sum_gap,
            "argmax_tol": self.argmax_tol,
            "trivial": self.trivial,
            "passed": self.passed,
            "failures": list(self.failures),
        }


def _matrix(A) -> np.ndarray:
    return np.asarray(getattr(A, "entries", A), dtype=float)


def _scales(M, y):
    a = float(np.max(np.abs(M), initial=0.0))
    eta = float(np.max(np.abs(y), initial=0.0))
    return (a if a > 0 else 1.0), (eta if eta > 0 else 1.0)


def solve_dual(A, Y, tol: float = 1e-9) -> DualCertificate:
    """Solve the dual program on the candidate columns of ``A``.

    The sup-norm constraint is imposed as ``<= 1``; with Y != 0 it is active
    at the optimum, so the value is unchanged.
    """
    M = _matrix(A)
    y = vec(Y)
    if y.size != M.shape[0]:
        raise ValueError("targets do not match the feature matrix rows")
    if not np.any(y):
        raise ValueError("the dual problem needs nonzero targets")
    a, eta = _scales(M, y)
    Ms, ys = M / a, y / eta
    n, P = Ms.shape
    # variables: c (free, n), slacks s+ (P), s- (P)
    A_eq = np.zeros((2 * P, n + 2 * P))
    A_eq[:P, :n] = Ms.T
    A_eq[P:, :n] = -Ms.T
    A_eq[:, n:] = np.eye(2 * P)
    cost = np.concatenate([-ys, np.zeros(2 * P)])
    lower = np.concatenate([np.full(n, -np.inf), np.zeros(2 * P)])
    sol = solve_lp(LinearProgram(cost, A_eq, np.ones(2 * P), lower, None), tol=tol)
    if sol.status == "unbounded":
        raise RankDeficientError(
            "dual problem is unbounded; the feature rows are linearly dependent"
        )
    if not sol.optimal:
        raise RuntimeError(f"dual problem reported status {sol.status}")
    c_scaled = sol.x[:n]
    chat = (c_scaled / a).reshape(np.shape(Y))
    cstar = float(y @ vec(chat))
    ghat = cstar * (vec(chat) @ M)
    return DualCertificate(chat, cstar, ghat, float(np.max(np.abs(ghat))))


def argmax_set(cert: DualCertificate, rel_tol: float = ARGMAX_TOL) -> np.ndarray:
    """Candidate indices where |g| is within ``rel_tol`` (relative) of its maximum."""
    if not cert.ghat_norm > 0:
        raise ValueError("certificate vanishes identically; no maximizing set")
    absval = np.abs(cert.ghat_values)
    return np.flatnonzero(absval >= cert.ghat_norm * (1.0 - rel_tol))


def _l1_interpolant(M, y, tol):
    """min sum|c| s.t. M c = y, with c = c+ - c-; returns c (unscaled)."""
    a, eta = _scales(M, y)
    Ms, ys = M / a, y / eta
    P = Ms.shape[1]
    sol = solve_lp(LinearProgram(np.ones(2 * P), np.hstack([Ms, -Ms]), ys), tol=tol)
    if not sol.optimal:
        raise RuntimeError(f"interpolation problem reported status {sol.status}")
    c = sol.x[:P] - sol.x[P:]
    return c * eta / a


def _zero_certificate(M, Y) -> DualCertificate:
    return DualCertificate(np.zeros(np.shape(Y)), 0.0, np.zeros(M.shape[1]), 0.0)


def solve_mni(A: FeatureMatrix, Y, cands=None, opts: MniOptions | None = None):
    """Two-stage minimum norm interpolation on the candidates behind ``A``.

    Returns ``(measure, certificate, report)``. The measure's atoms are the
    candidates with nonzero coefficients of a vertex solution of the L1
    program, so there are at most t*m of them.
    """
    opts = opts or MniOptions()
    M = _matrix(A)
    y = vec(Y)
    cands = cands if cands is not None else getattr(A, "candidates", None)
    points = np.asarray(getattr(cands, "points", cands), dtype=float)
    spec = A.spec
    weight = A.weight or WeightFn()
    if spec is None:
        raise ValueError("solve_mni needs a feature matrix that records its network spec")

    if not np.any(y):
        mu = DiscreteMeasure(spec, weight, ())
        cert = _zero_certificate(M, Y)
        report = MniReport(0.0, 0.0, 0.0, 0.0, True, True, 0, M.shape[0], 0.0,
                           opts.argmax_tol, trivial=True)
        return mu, cert, report

    if not opts.force:
        rank, deficient = rank_check(M, opts.rank_tol)
        if deficient:
            raise RankDeficientError(
                f"feature rows have numerical rank {rank} < {M.shape[0]}; "
                "pass force=True to solve anyway"
            )
    cert = solve_dual(M, Y, tol=opts.lp_tol)
    c = _l1_interpolant(M, y, opts.lp_tol)
    raw = DiscreteMeasure(spec, weight, tuple(
        Atom(points[p], c[p]) for p in np.flatnonzero(c)
    ))
    mu = prune(raw, opts.coeff_tol, opts.merge_tol)
    report = verify_representer(mu, cert, A, Y, cands, opts)
    return mu, cert, report


def _locate(mu: DiscreteMeasure, points: np.ndarray, merge_tol: float) -> np.ndarray:
    idx = []
    for atom in mu.atoms:
        dist = np.max(np.abs(points - atom.theta), axis=1)
        p = int(np.argmin(dist))
        if dist[p] > merge_tol:
            raise StructuralError("measure atom is not a candidate point")
        idx.append(p)
    return np.asarray(idx, dtype=int)


def verify_representer(mu: DiscreteMeasure, cert: DualCertificate, A, Y, cands=None,
                       opts: MniOptions | None = None) -> MniReport:
    """Recompute every report field for ``mu`` against a dual certificate.

    Checks, with ``opts.check_tol`` as the relative tolerance: duality gap,
    interpolation residual, support inside the argmax set, sign alignment
    with the certificate, the atom-count bound t*m and the coefficient sum
    ``sum |c_l| = max |g|``.
    """
    opts = opts or MniOptions()
    M = _matrix(A)
    y = vec(Y)
    cands = cands if cands is not None else getattr(A, "candidates", None)
    points = np.asarray(getattr(cands, "points", cands), dtype=float)
    idx = _locate(mu, points, opts.merge_tol)
    coeffs = mu.coeffs

    c_full = np.zeros(M.shape[1])
    np.add.at(c_full, idx, coeffs)
    residual = float(np.max(np.abs(M @ c_full - y), initial=0.0))
    tv = tv_norm(mu)
    scale = max(1.0, cert.cstar)
    gap = abs(tv - cert.cstar)
    coeff_sum_gap = abs(tv - cert.ghat_norm)

    if cert.ghat_norm > 0:
        members = set(argmax_set(cert, opts.argmax_tol).tolist())
    else:
        members = set()
    significant = np.abs(coeffs) > opts.coeff_tol
    support_ok = all(p in members for p, s in zip(idx, significant) if s)
    sign_ok = all(
        np.sign(c) == np.sign(cert.ghat_values[p])
        for p, c, s in zip(idx, coeffs, significant) if s
    )
    bound = M.shape[0]
    count = int(np.sum(significant))

    failures = []
    if gap > opts.check_tol * scale:
        failures.append("duality_gap")
    if residual > opts.check_tol * max(1.0, float(np.max(np.abs(y), initial=0.0))):
        failures.append("interpolation")
    if not support_ok:
        failures.append("support_in_argmax")
    if not sign_ok:
        failures.append("sign_aligned")
    if count > bound:
        failures.append("atom_count")
    if coeff_sum_gap > opts.check_tol * scale:
        failures.append("coeff_sum")
    return MniReport(cert.cstar, tv, gap, residual, support_ok, sign_ok, count, bound,
                     coeff_sum_gap, opts.argmax_tol, trivial=not np.any(y),
                     failures=failures)

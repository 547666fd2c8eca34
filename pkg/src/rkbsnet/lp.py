"""Dense two-phase primal simplex with Bland's rule.

Solves ``min c^T x  s.t.  A_eq x = b_eq,  lower <= x <= upper`` and returns a
basic (vertex) solution together with equality duals and reduced costs. The
pivot sequence is fully determined by the input, so identical programs give
bit-identical answers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

DEFAULT_TOL = 1e-9
_PIVOT_TOL = 1e-11


@dataclass
class LinearProgram:
    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).ravel().copy()
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel().copy()
        if self.A_eq.shape[0] != self.b_eq.size:
            raise ValueError("A_eq and b_eq have inconsistent shapes")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds must have one entry per variable")
        if not np.all(np.isfinite(self.c)):
            raise ValueError("objective entries must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise ValueError("bounds must allow a finite value")

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    basis: list[int] = field(default_factory=list)
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def dual_objective(self, lp: LinearProgram, tol: float = DEFAULT_TOL) -> float:
        """Objective of the dual built from ``duals`` and ``reduced_costs``.

        Positive reduced costs are charged to lower bounds and negative ones to
        upper bounds; a reduced cost beyond ``tol`` pointing at an infinite
        bound makes the dual point infeasible and the value infinite.
        """
        d = self.reduced_costs
        value = float(lp.b_eq @ self.duals)
        for di, lo, hi in zip(d, lp.lower, lp.upper):
            if di > 0:
                if np.isfinite(lo):
                    value += di * lo
                elif di > tol:
                    return -np.inf
            elif di < 0:
                if np.isfinite(hi):
                    value += di * hi
                elif di < -tol:
                    return -np.inf
        return value


class _StandardForm:
    """Map a bounded program onto ``min cbar^T z, Abar z = bbar, z >= 0``.

    Each original variable is ``x_i = offset_i + sum_k sign_k z_k`` over its
    columns. Finite two-sided bounds add one row ``z + w = upper - lower``.
    """

    def __init__(self, lp: LinearProgram):
        n, r = lp.n, lp.A_eq.shape[0]
        self.lp = lp
        self.offset = np.zeros(n)
        self.cols: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        col_entries = []  # per standard column: (orig var or -1, sign)
        ub_rows = []  # (standard column index of z, range)
        for i in range(n):
            lo, hi = lp.lower[i], lp.upper[i]
            if lo == hi:
                self.offset[i] = lo
            elif np.isfinite(lo):
                self.offset[i] = lo
                self.cols[i].append((len(col_entries), 1.0))
                col_entries.append((i, 1.0))
                if np.isfinite(hi):
                    ub_rows.append((len(col_entries) - 1, hi - lo))
            elif np.isfinite(hi):
                self.offset[i] = hi
                self.cols[i].append((len(col_entries), -1.0))
                col_entries.append((i, -1.0))
            else:
                self.cols[i].append((len(col_entries), 1.0))
                col_entries.append((i, 1.0))
                self.cols[i].append((len(col_entries), -1.0))
                col_entries.append((i, -1.0))
        n_struct = len(col_entries)
        n_std = n_struct + len(ub_rows)
        A = np.zeros((r + len(ub_rows), n_std))
        cbar = np.zeros(n_std)
        for k, (i, sgn) in enumerate(col_entries):
            A[:r, k] = sgn * lp.A_eq[:, i]
            cbar[k] = sgn * lp.c[i]
        b = np.empty(r + len(ub_rows))
        b[:r] = lp.b_eq - lp.A_eq @ self.offset
        for q, (k, width) in enumerate(ub_rows):
            A[r + q, k] = 1.0
            A[r + q, n_struct + q] = 1.0
            b[r + q] = width
        self.A, self.b, self.c = A, b, cbar
        self.n_struct = n_struct
        self.col_entries = col_entries
        self.n_eq = r

    def to_original(self, z: np.ndarray) -> np.ndarray:
        x = self.offset.copy()
        for i, cols in enumerate(self.cols):
            for k, sgn in cols:
                x[i] += sgn * z[k]
        return x


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0


def _run(T, basis, n_enter, tol, max_iter, counter):
    """Bland-rule iterations on tableau ``T``; returns OPTIMAL or UNBOUNDED."""
    rhs = T[:-1, -1]
    while True:
        if counter[0] >= max_iter:
            raise RuntimeError("simplex iteration limit reached")
        d = T[-1, :n_enter]
        entering = np.flatnonzero(d < -tol)
        if entering.size == 0:
            return OPTIMAL
        j = int(entering[0])
        col = T[:-1, j]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            return UNBOUNDED
        ratios = rhs[rows] / col[rows]
        rmin = ratios.min()
        ties = rows[ratios <= rmin + 1e-12 * max(1.0, abs(rmin))]
        leave = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, leave, j)
        basis[leave] = j
        counter[0] += 1


def _simplex_standard(A, b, c, tol, max_iter):
    """Two-phase simplex on ``min c^T z, A z = b, z >= 0``.

    Returns (status, z, basis, kept_rows, iterations).
    """
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    scale = np.max(np.abs(A), axis=1, initial=0.0)
    scale = np.maximum(scale, np.abs(b))
    scale[scale == 0.0] = 1.0
    A /= scale[:, None]
    b /= scale

    # columns that are a positive multiple of a unit vector start the basis
    basis = [-1] * m
    nnz = np.count_nonzero(A, axis=0)
    for j in np.flatnonzero(nnz == 1):
        i = int(np.flatnonzero(A[:, j])[0])
        if basis[i] < 0 and A[i, j] > 0:
            basis[i] = int(j)
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)

    T = np.zeros((m + 1, n + n_art + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    for q, i in enumerate(art_rows):
        T[i, n + q] = 1.0
        basis[i] = n + q
    for i in range(m):
        if basis[i] < n:
            T[i] /= T[i, basis[i]]
    counter = [0]

    if n_art:
        T[-1, :] = 0.0
        for i in art_rows:
            T[-1] -= T[i]
        for q in range(n_art):
            T[-1, n + q] = 0.0
        _run(T, basis, n, tol, max_iter, counter)
        if -T[-1, -1] > tol * max(1.0, float(np.max(b, initial=0.0))) * 10:
            return INFEASIBLE, None, None, None, counter[0]
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = list(range(m))
        for i in range(m):
            if basis[i] >= n:
                cand = np.flatnonzero(np.abs(T[i, :n]) > 1e-9)
                if cand.size:
                    _pivot(T, i, int(cand[0]))
                    basis[i] = int(cand[0])
                    counter[0] += 1
                else:
                    keep.remove(i)
        T = np.vstack([T[keep], T[-1:]])
        T = np.delete(T, np.s_[n:n + n_art], axis=1)
        basis = [basis[i] for i in keep]
    else:
        keep = list(range(m))

    T[-1, :] = 0.0
    T[-1, :n] = c
    for i, j in enumerate(basis):
        if c[j] != 0.0:
            T[-1] -= c[j] * T[i]
    status = _run(T, basis, n, tol, max_iter, counter)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None, None, counter[0]

    z = np.zeros(n)
    # recompute basic values from the unscaled data to shed pivoting round-off
    B = A[keep][:, basis]
    try:
        zb = np.linalg.solve(B, b[keep])
    except np.linalg.LinAlgError:
        zb = T[:-1, -1].copy()
    zb[np.abs(zb) <= tol] = 0.0
    zb = np.maximum(zb, 0.0)
    z[basis] = zb
    return OPTIMAL, z, basis, (keep, scale), counter[0]


def solve_lp(lp: LinearProgram, tol: float = DEFAULT_TOL, max_iter: int = 200000) -> LpSolution:
    """Solve ``lp``; infeasibility and unboundedness are reported in ``status``."""
    sf = _StandardForm(lp)
    r = lp.A_eq.shape[0]
    if sf.A.shape[1] == 0:
        # every variable fixed: feasible iff the residual vanishes
        x = sf.offset.copy()
        if np.max(np.abs(lp.A_eq @ x - lp.b_eq), initial=0.0) > tol * max(1.0, np.max(np.abs(lp.b_eq), initial=0.0)):
            return LpSolution(INFEASIBLE)
        y = np.zeros(r)
        return LpSolution(OPTIMAL, x, float(lp.c @ x), [], y, lp.c.copy(), 0)
    status, z, basis, extra, iters = _simplex_standard(sf.A, sf.b, sf.c, tol, max_iter)
    if status != OPTIMAL:
        return LpSolution(status, iterations=iters)
    keep, scale = extra
    x = sf.to_original(z)
    x = np.clip(x, lp.lower, lp.upper)

    # duals of the scaled standard form, mapped back to the original rows
    As = sf.A.copy()
    flip = np.where(sf.b < 0, -1.0, 1.0)
    As = (As * flip[:, None]) / scale[:, None]
    ys = np.zeros(As.shape[0])
    try:
        ys[keep] = np.linalg.solve(As[keep][:, basis].T, sf.c[basis])
    except np.linalg.LinAlgError:
        ys[keep] = np.linalg.lstsq(As[keep][:, basis].T, sf.c[basis], rcond=None)[0]
    y_all = ys * flip / scale
    y = y_all[:r]
    reduced = lp.c - lp.A_eq.T @ y

    basic_orig = sorted({sf.col_entries[k][0] for k in basis if k < sf.n_struct})
    return LpSolution(OPTIMAL, x, float(lp.c @ x), basic_orig, y, reduced, iters)

"""Dense bounded-variable primal simplex.

Problems are tiny (a few hundred columns at most), so a full tableau with
periodic refactorization is enough. Pricing is Dantzig's rule until a streak
of degenerate pivots, after which Bland's rule takes over for the rest of
the solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

INF = math.inf

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_FEAS_TOL = 1e-9
_DEGENERATE_STREAK = 50
_REFACTOR_EVERY = 100


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class LpError(ValueError):
    pass


@dataclass
class LpProblem:
    """minimize c.x  s.t.  rows,  lo <= x <= hi (hi may be INF)."""

    objective: Sequence[float]
    rows: list[tuple[Sequence[float], Relation | str, float]] = field(default_factory=list)
    bounds: list[tuple[float, float]] | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        n = self.objective.size
        if not np.all(np.isfinite(self.objective)):
            raise LpError("objective has non-finite coefficients")
        if self.bounds is None:
            self.bounds = [(0.0, INF)] * n
        if len(self.bounds) != n:
            raise LpError(f"{len(self.bounds)} bounds for {n} variables")
        for idx, (lo, hi) in enumerate(self.bounds):
            if not math.isfinite(lo) or math.isnan(hi) or hi == -INF or lo > hi:
                raise LpError(f"bad bounds for variable {idx}: [{lo}, {hi}]")
        rows = []
        for pos, (coef, rel, rhs) in enumerate(self.rows):
            coef = np.asarray(coef, dtype=float)
            if coef.shape != (n,):
                raise LpError(f"row {pos} has {coef.size} coefficients, expected {n}")
            if not (np.all(np.isfinite(coef)) and math.isfinite(rhs)):
                raise LpError(f"row {pos} has non-finite data")
            rows.append((coef, Relation(rel), float(rhs)))
        self.rows = rows

    @property
    def num_vars(self) -> int:
        return self.objective.size


@dataclass
class LpOutcome:
    status: LpStatus
    values: np.ndarray | None = None
    objective: float = math.nan
    duals: np.ndarray | None = None
    iterations: int = 0


class _Tableau:
    def __init__(self, A, b, upper, basis):
        self.A = A  # standard-form matrix, kept for refactorization
        self.b = b
        self.upper = upper
        self.m, self.ncols = A.shape
        self.basis = list(basis)
        self.at_upper = np.zeros(self.ncols, dtype=bool)
        self.blocked = np.zeros(self.ncols, dtype=bool)
        self.iterations = 0
        self.refactor()

    def nonbasic_values(self):
        x = np.where(self.at_upper, self.upper, 0.0)
        x[self.basis] = 0.0
        return x

    def refactor(self):
        B = self.A[:, self.basis]
        self.M = np.linalg.solve(B, self.A)
        self.beta = np.linalg.solve(B, self.b - self.A @ self.nonbasic_values())

    def values(self):
        x = self.nonbasic_values()
        x[self.basis] = self.beta
        return x

    def reduced_costs(self, cost):
        return cost - cost[self.basis] @ self.M

    def run(self, cost, max_iter):
        d = self.reduced_costs(cost)
        bland = False
        streak = 0
        in_basis = np.zeros(self.ncols, dtype=bool)
        in_basis[self.basis] = True
        while True:
            if self.iterations >= max_iter:
                raise LpError("iteration limit reached")
            movable = ~in_basis & ~self.blocked & (self.upper > 0)
            improving = movable & (((~self.at_upper) & (d < -_COST_TOL)) | (self.at_upper & (d > _COST_TOL)))
            cand = np.flatnonzero(improving)
            if cand.size == 0:
                return LpStatus.OPTIMAL
            q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            direction = -1.0 if self.at_upper[q] else 1.0
            delta = -direction * self.M[:, q]

            # Harris two-pass ratio test: find the step allowed when every
            # bound is loosened by _FEAS_TOL, then among rows blocking within
            # that step pivot on the largest |delta| to keep the basis well
            # conditioned
            ub = self.upper[self.basis]
            tol = _PIVOT_TOL * max(1.0, float(np.abs(delta).max(initial=0.0)))
            dec = delta < -tol
            inc = (delta > tol) & np.isfinite(ub)
            room = np.full(self.m, INF)
            room[dec] = np.maximum(self.beta[dec], 0.0) / -delta[dec]
            room[inc] = np.maximum(ub[inc] - self.beta[inc], 0.0) / delta[inc]
            loose = np.full(self.m, INF)
            loose[dec] = (np.maximum(self.beta[dec], 0.0) + _FEAS_TOL) / -delta[dec]
            loose[inc] = (np.maximum(ub[inc] - self.beta[inc], 0.0) + _FEAS_TOL) / delta[inc]
            theta_row = loose.min() if self.m else INF
            theta_flip = self.upper[q]
            if not math.isfinite(theta_row) and not math.isfinite(theta_flip):
                return LpStatus.UNBOUNDED
            self.iterations += 1

            if theta_flip <= (room.min() if self.m else INF):
                theta = theta_flip
                self.beta += theta * delta
                self.at_upper[q] = not self.at_upper[q]
            else:
                ties = np.flatnonzero(room <= theta_row)
                if bland:
                    r = int(min(ties, key=lambda i: self.basis[i]))
                else:
                    r = int(ties[np.argmax(np.abs(delta[ties]))])
                theta = room[r]
                leaving = self.basis[r]
                entering_value = (self.upper[q] if self.at_upper[q] else 0.0) + direction * theta
                self.beta += theta * delta
                self.beta[r] = entering_value
                self.at_upper[leaving] = bool(delta[r] > 0)
                self.at_upper[q] = False
                self._pivot(r, q)
                d -= d[q] * self.M[r]
                in_basis[leaving] = False
                in_basis[q] = True
                if self.iterations % _REFACTOR_EVERY == 0:
                    self.refactor()
                    d = self.reduced_costs(cost)
            streak = streak + 1 if theta <= 1e-12 else 0
            if streak > _DEGENERATE_STREAK:
                bland = True

    def _pivot(self, r, q):
        M = self.M
        M[r] /= M[r, q]
        col = M[:, q].copy()
        col[r] = 0.0
        M -= np.outer(col, M[r])
        self.basis[r] = q


def solve_lp(p: LpProblem, max_iter: int = 50_000) -> LpOutcome:
    c = p.objective
    n = c.size
    lo = np.array([b[0] for b in p.bounds], dtype=float)
    hi = np.array([b[1] for b in p.bounds], dtype=float)
    upper_struct = hi - lo

    kept = []
    for coef, rel, rhs in p.rows:
        rhs_shift = rhs - float(coef @ lo)
        scale = np.abs(coef).max() if coef.size else 0.0
        if scale == 0.0:
            ok = {Relation.LE: rhs_shift >= -1e-9, Relation.GE: rhs_shift <= 1e-9,
                  Relation.EQ: abs(rhs_shift) <= 1e-9}[rel]
            if not ok:
                return LpOutcome(LpStatus.INFEASIBLE)
            kept.append(None)
            continue
        kept.append((coef / scale, rel, rhs_shift / scale, 1.0 / scale))
    rows = [r for r in kept if r is not None]
    m = len(rows)
    slack_rows = [i for i, r in enumerate(rows) if r[1] != Relation.EQ]
    ns = len(slack_rows)

    A = np.zeros((m, n + ns))
    b = np.zeros(m)
    sign = np.ones(m)
    for i, (coef, rel, rhs, _) in enumerate(rows):
        A[i, :n] = coef
        b[i] = rhs
    for pos, i in enumerate(slack_rows):
        A[i, n + pos] = 1.0 if rows[i][1] == Relation.LE else -1.0
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    sign[neg] = -1.0

    # rows whose slack enters with +1 start with the slack basic
    basis = []
    art_rows = []
    slack_col = {i: n + pos for pos, i in enumerate(slack_rows)}
    for i in range(m):
        col = slack_col.get(i)
        if col is not None and A[i, col] > 0:
            basis.append(col)
        else:
            basis.append(None)
            art_rows.append(i)
    na = len(art_rows)
    A_full = np.hstack([A, np.zeros((m, na))])
    for pos, i in enumerate(art_rows):
        A_full[i, n + ns + pos] = 1.0
        basis[i] = n + ns + pos
    ncols = n + ns + na
    upper = np.concatenate([upper_struct, np.full(ns, INF), np.full(na, INF)])

    tab = _Tableau(A_full, b, upper, basis)
    if na:
        cost1 = np.zeros(ncols)
        cost1[n + ns:] = 1.0
        tab.run(cost1, max_iter)
        x = tab.values()
        infeas = x[n + ns:].sum()
        if infeas > 1e-7 * max(1.0, np.abs(b).max(initial=0.0)):
            return LpOutcome(LpStatus.INFEASIBLE, iterations=tab.iterations)
        _drive_out_artificials(tab, n + ns)
        tab.upper[n + ns:] = 0.0
        tab.blocked[n + ns:] = True
    cost2 = np.concatenate([c, np.zeros(ns + na)])
    status = tab.run(cost2, max_iter)
    if status == LpStatus.UNBOUNDED:
        return LpOutcome(LpStatus.UNBOUNDED, iterations=tab.iterations)
    tab.refactor()
    xs = tab.values()
    values = lo + np.clip(xs[:n], 0.0, upper_struct)

    B = A_full[:, tab.basis]
    y_std = np.linalg.solve(B.T, cost2[tab.basis]) if m else np.zeros(0)
    duals = np.zeros(len(p.rows))
    pos = 0
    for idx, entry in enumerate(kept):
        if entry is None:
            continue
        duals[idx] = y_std[pos] * sign[pos] * entry[3]
        pos += 1
    return LpOutcome(
        LpStatus.OPTIMAL,
        values=values,
        objective=float(c @ values),
        duals=duals,
        iterations=tab.iterations,
    )


def _drive_out_artificials(tab: _Tableau, first_art: int):
    for r in range(tab.m):
        if tab.basis[r] < first_art:
            continue
        row = tab.M[r, :first_art].copy()
        row[[j for j in tab.basis if j < first_art]] = 0.0
        cands = np.flatnonzero(np.abs(row) > 1e-9)
        if cands.size == 0:
            continue  # redundant row; artificial stays basic at zero
        q = int(cands[np.argmax(np.abs(row[cands]))])
        tab.at_upper[tab.basis[r]] = False
        tab.at_upper[q] = False
        tab._pivot(r, q)
        tab.beta = np.linalg.solve(tab.A[:, tab.basis], tab.b - tab.A @ tab.nonbasic_values())


def dual_bound(p: LpProblem, duals: np.ndarray, tol: float = 1e-9) -> float:
    """Lagrangian lower bound certified by ``duals`` (sign-corrected per row)."""
    y = np.array(duals, dtype=float)
    for idx, (_, rel, _) in enumerate(p.rows):
        if rel == Relation.GE:
            y[idx] = max(y[idx], 0.0)
        elif rel == Relation.LE:
            y[idx] = min(y[idx], 0.0)
    reduced = p.objective.copy()
    bound = 0.0
    for idx, (coef, _, rhs) in enumerate(p.rows):
        reduced -= y[idx] * coef
        bound += y[idx] * rhs
    for j, (lo, hi) in enumerate(p.bounds):
        if reduced[j] >= -tol:
            bound += reduced[j] * lo
        elif math.isinf(hi):
            return -INF
        else:
            bound += reduced[j] * hi
    return bound

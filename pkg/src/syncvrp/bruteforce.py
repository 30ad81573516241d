"""Exhaustive verification oracle for tiny instances.

Enumerates every assignment of customers to primary vehicles (all vehicle
subsets when splitting), every route order, and every support flow, then
evaluates each complete plan. Nothing is pruned by bounds. Written
separately from the branch-and-bound so the two can check each other; the
split-duration LP goes through scipy's HiGHS instead of the in-house
simplex.

Support flows are generated by growing the plan one copy at a time, each
with the multiset of places its support vehicles come from. A copy may be
placed after its last predecessor only behind copies with smaller ids, so
every flow appears once (its smallest-id topological order).

Split plans (each shared customer has exactly two copies since at most two
primary vehicles are allowed) are evaluated through path classes: for each
set S of split copies, c_S is the longest path whose split copies are
exactly S, with split durations left out. The makespan is then
min over split fractions of max_S (c_S + durations of S). With one shared
customer this is a one-dimensional convex piecewise-linear problem solved
at its breakpoints; with more, the per-customer minimum is a lower bound
and the LP is solved only if that bound is below the best value so far.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np
from scipy.optimize import linprog

from .exact import SearchStats, SolveResult, SolveStatus
from .graph import VariantPolicy, build_graph
from .instance import Instance, mode_service_time
from .schedule import ServicePlan, Solution, SupportFlow, compute_schedule

MAX_CUSTOMERS, MAX_PRIMARY, MAX_SUPPORT = 4, 2, 3
_EPS = 1e-9


class InstanceTooLarge(ValueError):
    pass


def _lower_envelope_min(lines):
    """min over a in [0, 1] of max_i (c_i + slope_i * a)."""
    cands = [0.0, 1.0]
    for (c1, k1), (c2, k2) in itertools.combinations(lines, 2):
        if k1 != k2:
            a = (c2 - c1) / (k1 - k2)
            if 0.0 < a < 1.0:
                cands.append(a)
    return min((max(c + k * a for c, k in lines), a) for a in cands)


class _Enumerator:
    def __init__(self, inst: Instance, policy: VariantPolicy):
        self.inst = inst
        self.g = build_graph(inst, policy, big_m=math.inf)
        self.stats = SearchStats()
        self.best = math.inf
        self.best_plan = None

    # one primary-route structure --------------------------------------------------
    def run_routes(self, routes, shared):
        g = self.g
        self.routes = routes
        self.shared = shared
        self.bit = {}
        for r in routes:
            for j in r:
                if g.original_of[j] in shared:
                    self.bit[j] = 1 << len(self.bit)
        self.cap = {j: min(g.num_support, g.max_mode(j)) for r in routes for j in r}
        self.head = [0] * len(routes)
        self.order = []
        self.moves = []
        self.free = {0: g.num_support}
        self.mode = {}
        self.dur = {}
        self.start = {}
        self.paths = {}  # copy -> {mask: longest path up to its completion}
        self.total = sum(len(r) for r in routes)
        self._grow()

    def _grow(self):
        if len(self.order) == self.total:
            self._leaf()
            return
        g = self.g
        for k, r in enumerate(self.routes):
            if self.head[k] == len(r):
                continue
            j = r[self.head[k]]
            prim = r[self.head[k] - 1] if self.head[k] else None
            places = sorted(loc for loc, c in self.free.items() if c > 0 and g.gamma.get((loc, j), 0) > 0)
            for m in range(1, self.cap[j] + 1):
                for combo in itertools.combinations_with_replacement(places, m):
                    counts = {loc: combo.count(loc) for loc in sorted(set(combo))}
                    if any(c > self.free[loc] for loc, c in counts.items()):
                        continue
                    preds = [loc for loc in counts if loc != 0]
                    if prim is not None:
                        preds.append(prim)
                    last = max((self.order.index(p) for p in preds), default=-1)
                    if any(x > j for x in self.order[last + 1:]):
                        continue
                    self._place(j, m, counts, preds, k)
                    self._grow()
                    self._unplace(j, counts, k)

    def _place(self, j, m, counts, preds, k):
        g = self.g
        v = g.original_of[j]
        d = 0.0 if v in self.shared else mode_service_time(self.inst.customer(v), m)
        # every chain starts at the depot; by the triangle inequality tau(0, j)
        # never exceeds the earliest start, so it can always be included
        b = self.bit.get(j, 0)
        paths = {b: g.tau[(0, j)] + d}
        st = g.tau[(0, j)]
        for i in preds:
            tt = g.tau[(i, j)]
            st = max(st, self.start[i] + self.dur[i] + tt)
            for mask, length in self.paths[i].items():
                val = length + tt + d
                if val > paths.get(mask | b, -1.0):
                    paths[mask | b] = val
        self.order.append(j)
        self.mode[j], self.dur[j], self.start[j], self.paths[j] = m, d, st, paths
        for loc, c in counts.items():
            self.free[loc] -= c
            self.moves.append((loc, j, c))
        self.free[j] = m
        self.head[k] += 1

    def _unplace(self, j, counts, k):
        self.head[k] -= 1
        del self.free[j]
        for loc, c in counts.items():
            self.free[loc] += c
            self.moves.pop()
        for d in (self.mode, self.dur, self.start, self.paths):
            del d[j]
        self.order.pop()

    def _leaf(self):
        self.stats.leaves += 1
        value = max((self.start[j] + self.dur[j] for j in self.order), default=0.0)
        if value >= self.best - _EPS:
            return  # split durations only add to this relaxed value
        dur = dict(self.dur)
        if self.shared:
            value, fractions = self._split_value()
            if value >= self.best - _EPS:
                return
            if fractions is None:
                self.stats.lp_calls += 1
                out = _split_lp(self.inst, self.g, self.routes, self.order, self.moves, self.mode)
                if out is None:
                    return
                value, dur = out
            else:
                dur.update(fractions)
        if value < self.best - _EPS:
            self.best = value
            left = {loc: c for loc, c in self.free.items() if c}
            self.best_plan = ([list(r) for r in self.routes], list(self.moves), left, dict(self.mode), dur)

    def _split_value(self):
        """Exact value with one shared customer, else a lower bound (fractions None)."""
        g, inst, bit = self.g, self.inst, self.bit
        classes: dict[int, float] = {}
        for j in self.order:
            for mask, length in self.paths[j].items():
                if length > classes.get(mask, -1.0):
                    classes[mask] = length
        full = {}
        for j in self.order:
            v = g.original_of[j]
            if v in self.shared and v not in full:
                a, b = [h for h in self.order if g.original_of[h] == v]
                spec = inst.customer(v)
                da = spec.demand / spec.rate(self.mode[a])
                db = spec.demand / spec.rate(self.mode[b])
                full[v] = (a, b, da, db, bit[a] | bit[b], min(da, db))
        # a customer with both copies on a path adds at least min(da, db) to it
        least = {mask: sum(mn for *_, pair, mn in full.values() if mask & pair == pair) for mask in classes}
        bound = max(length + least[mask] for mask, length in classes.items())
        if bound >= self.best - _EPS:
            return bound, None
        fractions = None
        for v, (a, b, da, db, pair, mn) in full.items():
            # fraction x of v's work at copy a: durations x*da and (1-x)*db
            lines = {}
            for mask, length in classes.items():
                own = mn if mask & pair == pair else 0.0
                key = (bool(mask & bit[a]), bool(mask & bit[b]))
                val = length + least[mask] - own
                if val > lines.get(key, -1.0):
                    lines[key] = val
            env = [(c + (db if inb else 0.0), (da if ina else 0.0) - (db if inb else 0.0))
                   for (ina, inb), c in lines.items()]
            val, x = _lower_envelope_min(env)
            bound = max(bound, val)
            if len(full) == 1:
                fractions = {a: x * da, b: (1.0 - x) * db}
        return bound, fractions


def _split_lp(inst, g, routes, order, moves, modes):
    """min makespan over durations with demand equalities, via HiGHS."""
    idx = {j: p for p, j in enumerate(order)}
    nn = len(order)
    # columns: s_0..s_{nn-1}, t_0..t_{nn-1}, T
    ncol = 2 * nn + 1
    A, b = [], []

    def prec(i, j, tt):
        # t_i + s_i + tt <= t_j
        row = np.zeros(ncol)
        row[nn + idx[i]] += 1
        row[idx[i]] += 1
        row[nn + idx[j]] -= 1
        A.append(row)
        b.append(-tt)

    for r in routes:
        for a, c in zip(r, r[1:]):
            prec(a, c, g.tau[(a, c)])
    for loc, j, _ in moves:
        if loc:
            prec(loc, j, g.tau[(loc, j)])
    for j in order:
        row = np.zeros(ncol)
        row[nn + idx[j]] -= 1
        A.append(row)
        b.append(-g.tau[(0, j)])
        row = np.zeros(ncol)
        row[nn + idx[j]] += 1
        row[idx[j]] += 1
        row[-1] -= 1
        A.append(row)
        b.append(0.0)
    Aeq, beq = [], []
    for v in range(1, inst.num_customers + 1):
        row = np.zeros(ncol)
        spec = inst.customer(v)
        for j in order:
            if g.original_of[j] == v:
                row[idx[j]] = spec.rate(modes[j])
        Aeq.append(row)
        beq.append(spec.demand)
    caps = []
    for j in order:
        spec = inst.customer(g.original_of[j])
        caps.append((0, spec.demand / spec.rate(modes[j])))
    c = np.zeros(ncol)
    c[-1] = 1.0
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), A_eq=np.array(Aeq), b_eq=np.array(beq),
                  bounds=caps + [(0, None)] * (nn + 1), method="highs")
    if res.status != 0:
        return None
    return float(res.fun), {j: float(res.x[idx[j]]) for j in order}


def brute_force(inst: Instance, policy: VariantPolicy) -> SolveResult:
    nv, nk, no = inst.num_customers, inst.fleet.primary_count, inst.fleet.support_count
    if nv > MAX_CUSTOMERS or nk > MAX_PRIMARY or no > MAX_SUPPORT:
        raise InstanceTooLarge(
            f"brute force handles |V|<={MAX_CUSTOMERS}, |K|<={MAX_PRIMARY}, |O|<={MAX_SUPPORT}; "
            f"got {nv}-{nk}-{no}"
        )
    t0 = time.perf_counter()
    en = _Enumerator(inst, policy)
    g = en.g
    if policy.split_allowed:
        options = [s for r in range(1, nk + 1) for s in itertools.combinations(range(nk), r)]
    else:
        options = [(k,) for k in range(nk)]
    for assign in itertools.product(options, repeat=nv):
        members = [[v for v in range(1, nv + 1) if k in assign[v - 1]] for k in range(nk)]
        shared = {v for v in range(1, nv + 1) if len(assign[v - 1]) > 1}
        for perms in itertools.product(*(itertools.permutations(m) for m in members)):
            en.run_routes([[g.copy_of(k + 1, v) for v in perms[k]] for k in range(nk)], shared)
    stats = en.stats
    stats.time_s = time.perf_counter() - t0
    stats.nodes = stats.leaves

    routes, moves, left, modes, dur = en.best_plan
    counts: dict[tuple[int, int], int] = {}
    for loc, j, c in moves:
        counts[(loc, j)] = counts.get((loc, j), 0) + c
    for loc, c in left.items():
        counts[(loc, g.n)] = counts.get((loc, g.n), 0) + c
    sol = Solution(tuple(tuple(r) for r in routes), SupportFlow(counts), ServicePlan(modes, dur), policy)
    return SolveResult(sol, compute_schedule(g, sol), SolveStatus.OPTIMAL, en.best, stats)

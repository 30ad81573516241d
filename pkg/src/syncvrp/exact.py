"""Exact search: construction heuristic, branch-and-bound and partial bounds.

The search runs in two phases.

Phase A assigns original customers (in id order) to primary vehicles and
inserts them into route sequences. Primary vehicles are interchangeable, so
a customer may open new vehicles only from the lowest-numbered empty ones.

Phase B fixes the support flow. Customer copies are inserted one at a time
(always the next copy of some route), each together with the multiset of
locations its support vehicles come from; the count is the mode. A copy may
follow its last predecessor only by nodes with smaller ids, which makes the
insertion order the smallest-id topological order of the final precedence
graph, so each (routes, flow) pair is generated exactly once.

Without splitting all durations are fixed by the modes and start times are
exact during phase B. With splitting, copies of a customer served by
several vehicles get duration 0 during the search (a relaxation) and a
duration LP is solved at leaves that can still beat the incumbent.
"""

from __future__ import annotations

import copy
import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum

from .graph import ExpandedGraph, VariantPolicy, build_graph
from .instance import Instance, mode_service_time
from .schedule import (
    Schedule,
    ServicePlan,
    Solution,
    SplitInfeasible,
    SupportFlow,
    SupportPaths,
    compose_flow,
    compute_schedule,
    optimize_split_times,
)

EPS = 1e-9


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE_LIMIT = "FeasibleLimit"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SearchLimits:
    max_nodes: int = 50_000_000
    max_time: float = 60.0
    incumbent: tuple[Solution, Schedule] | None = None

    def __post_init__(self):
        if self.max_nodes <= 0 or self.max_time <= 0:
            raise ValueError("search limits must be positive")


@dataclass
class SearchStats:
    nodes: int = 0
    pruned: int = 0
    leaves: int = 0
    lp_calls: int = 0
    time_s: float = 0.0


@dataclass
class SolveResult:
    solution: Solution | None
    schedule: Schedule | None
    status: SolveStatus
    lower_bound: float
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def makespan(self) -> float:
        return self.schedule.makespan if self.schedule is not None else math.inf


# -- construction heuristic -------------------------------------------------

def construction_heuristic(inst: Instance, policy: VariantPolicy) -> tuple[Solution, Schedule]:
    """Parallel nearest-neighbour routes, each with its own support team.

    Active primary vehicles get equal shares of the support fleet and keep
    them for the whole route; at a customer only as many team members as the
    customer admits take part and the rest move on to the next stop.
    """
    nv, nk, no = inst.num_customers, inst.fleet.primary_count, inst.fleet.support_count
    g = build_graph(inst, policy, big_m=0.0)
    active = min(nk, no, nv)
    routes_v: list[list[int]] = [[] for _ in range(nk)]
    here = [0] * nk
    left = set(range(1, nv + 1))
    while left:
        for k in range(active):
            if not left:
                break
            v = min(left, key=lambda c: (inst.distance(here[k], c), c))
            routes_v[k].append(v)
            here[k] = v
            left.remove(v)

    paths = []
    modes = {}
    durations = {}
    for k in range(nk):
        team = no // active + (1 if k < no % active else 0) if k < active else 0
        copies = [g.copy_of(k + 1, v) for v in routes_v[k]]
        for member in range(1, team + 1):
            paths.append((0,) + tuple(j for j in copies if member <= g.max_mode(j)) + (g.n,))
        for j in copies:
            m = min(team, g.max_mode(j))
            modes[j] = m
            durations[j] = mode_service_time(g.customer(j), m)
    paths += [(0, g.n)] * (no - len(paths))
    sol = Solution(
        routes=tuple(tuple(g.copy_of(k + 1, v) for v in routes_v[k]) for k in range(nk)),
        flow=compose_flow(g, SupportPaths(tuple(paths))),
        services=ServicePlan(modes, durations),
        policy=policy,
    )
    return sol, compute_schedule(g, sol)


# -- search state ------------------------------------------------------------

@dataclass
class SearchState:
    """A node of the search tree.

    ``routes`` holds original customer ids per vehicle while phase A is
    running (``next_customer <= |V|``); afterwards the phase B fields
    describe which copies have been inserted and where support vehicles are.
    """

    routes: list[list[int]]
    next_customer: int = 1
    order: list[int] = field(default_factory=list)
    position: dict[int, int] = field(default_factory=dict)
    pos: list[int] = field(default_factory=list)
    avail: dict[int, int] = field(default_factory=dict)
    start: dict[int, float] = field(default_factory=dict)
    comp: dict[int, float] = field(default_factory=dict)
    mode: dict[int, int] = field(default_factory=dict)
    moves: list[tuple[int, int, int]] = field(default_factory=list)
    ready: list[float] = field(default_factory=list)
    last: list[int] = field(default_factory=list)
    copy_routes: list[list[int]] = field(default_factory=list)
    split_customers: frozenset[int] = frozenset()
    saved: list[tuple[float, int]] = field(default_factory=list)

    @property
    def in_phase_a(self) -> bool:
        return not self.copy_routes

    def clone(self) -> "SearchState":
        return copy.deepcopy(self)


class _Context:
    """Per-instance constants shared by the search and the bounds."""

    def __init__(self, g: ExpandedGraph):
        inst = g.instance
        self.g = g
        self.inst = inst
        self.policy = g.policy
        self.nv = inst.num_customers
        self.nk = inst.fleet.primary_count
        self.no = inst.fleet.support_count
        self.split = g.policy.split_allowed
        nv, no = self.nv, self.no
        self.dist = [[inst.distance(u, v) for v in range(nv + 1)] for u in range(nv + 1)]
        self.orig = [0] * (g.n + 1)
        for j, v in g.original_of.items():
            self.orig[j] = v
        self.owner = [0] * (g.n + 1)
        for j, k in g.owner.items():
            self.owner[j] = k
        self.b = [0] * (nv + 1)
        self.stime: list[list[float]] = [[]] * (nv + 1)
        self.s_fast = [0.0] * (nv + 1)
        self.min_ms = [0.0] * (nv + 1)
        self.min_in = [0.0] * (nv + 1)
        for v in range(1, nv + 1):
            spec = inst.customer(v)
            top = min(spec.max_modes, no)
            self.b[v] = top
            self.stime[v] = [0.0] + [mode_service_time(spec, m) for m in range(1, top + 1)]
            self.s_fast[v] = self.stime[v][top]
            # support time spent serving v, whatever the split: sum m_j s_j >= d min(m/p)
            self.min_ms[v] = spec.demand * min(m / spec.rate(m) for m in range(1, top + 1))
            self.min_in[v] = min(self.dist[u][v] for u in range(nv + 1) if u != v)

    def tau(self, i: int, j: int) -> float:
        return self.dist[self.orig[i]][self.orig[j]]


# -- bounds --------------------------------------------------------------------

def _route_bound(ctx: _Context, state: SearchState) -> float:
    """Lower bound for a phase A node (customers < next_customer placed)."""
    dist, s_fast = ctx.dist, ctx.s_fast
    nv, nk, no = ctx.nv, ctx.nk, ctx.no
    copies = [0] * (nv + 1)
    for route in state.routes:
        for v in route:
            copies[v] += 1
    lb = 0.0
    travel_total = 0.0
    for route in state.routes:
        here, t = 0, 0.0
        for v in route:
            t += dist[here][v]
            travel_total += dist[here][v]
            if copies[v] == 1:
                t += s_fast[v]
            here = v
        lb = max(lb, t)
    work = 0.0
    support = 0.0
    for v in range(1, nv + 1):
        placed = v < state.next_customer
        share = copies[v] if placed else (nk if ctx.split else 1)
        lb = max(lb, dist[0][v] + s_fast[v] / share)
        work += s_fast[v]
        support += ctx.min_ms[v] + ctx.min_in[v] * (copies[v] if placed else 1)
    lb = max(lb, (travel_total + work) / nk, support / no)
    return lb


def _insertion_bound(ctx: _Context, state: SearchState) -> float:
    """Lower bound for a phase B node (routes fixed, some copies inserted)."""
    lb = max(state.comp.values(), default=0.0)
    split_c = state.split_customers
    orig, stime, dist = ctx.orig, ctx.stime, ctx.dist
    future = 0.0
    for k, route in enumerate(state.copy_routes):
        t = state.ready[k]
        here = orig[state.last[k]]
        for j in route[state.pos[k]:]:
            v = orig[j]
            t += dist[here][v]
            if v not in split_c:
                t += stime[v][ctx.b[v]]
                future += ctx.min_ms[v]
            future += ctx.min_in[v]
            here = v
        lb = max(lb, t)
    ready_total = sum(cnt * state.comp[loc] for loc, cnt in state.avail.items() if loc != 0)
    lb = max(lb, (ready_total + future) / ctx.no)
    if split_c:
        # pure workload version: every support vehicle works sequentially
        travel = sum(cnt * ctx.tau(i, j) for i, j, cnt in state.moves)
        work = sum(state.mode[j] * stime[orig[j]][state.mode[j]]
                   for j in state.order if orig[j] not in split_c)
        work += sum(ctx.min_ms[v] for v in split_c)
        lb = max(lb, (travel + work + future) / ctx.no)
    return lb


def _split_leaf_bound(ctx: _Context, state: SearchState) -> float:
    """Water-filling bound for a complete structure with split customers.

    Start times and tails (longest path from a completion to the end) are
    taken from the schedule where split copies take no time. Durations only
    push times later, so copy i of customer v finishes the whole plan no
    earlier than a_i + s_i with a_i = start + tail, while sum p_i s_i = d_v.
    """
    orig = ctx.orig
    succ: dict[int, list[int]] = {j: [] for j in state.order}
    for route in state.copy_routes:
        for a, b in zip(route, route[1:]):
            succ[a].append(b)
    for loc, j, _ in state.moves:
        if loc:
            succ[loc].append(j)
    dur = {j: state.comp[j] - state.start[j] for j in state.order}
    tail: dict[int, float] = {}
    for j in reversed(state.order):
        tail[j] = max((ctx.tau(j, h) + dur[h] + tail[h] for h in succ[j]), default=0.0)
    lb = 0.0
    for v in state.split_customers:
        spec = ctx.inst.customer(v)
        level = sorted((state.start[j] + tail[j], spec.rate(state.mode[j]))
                       for j in state.order if orig[j] == v)
        need, rate = spec.demand, 0.0
        for idx, (a, p) in enumerate(level):
            rate += p
            nxt = level[idx + 1][0] if idx + 1 < len(level) else math.inf
            # raising the level from a to nxt adds rate * (nxt - a) work
            if rate * (nxt - a) >= need:
                lb = max(lb, a + need / rate)
                break
            need -= rate * (nxt - a)
    return lb


def partial_lower_bound(state: SearchState, g: ExpandedGraph) -> float:
    ctx = _Context(g)
    return _route_bound(ctx, state) if state.in_phase_a else _insertion_bound(ctx, state)


# -- search ----------------------------------------------------------------------

class _Abort(Exception):
    pass


class _Search:
    def __init__(self, g: ExpandedGraph, limits: SearchLimits, use_bounds: bool = True):
        self.ctx = _Context(g)
        self.g = g
        self.limits = limits
        self.use_bounds = use_bounds
        self.stats = SearchStats()
        self.best_value = math.inf
        self.best: tuple[Solution, Schedule] | None = None
        self.t0 = time.perf_counter()
        self.snapshot_hook = None

    # bookkeeping
    def tick(self):
        self.stats.nodes += 1
        if self.stats.nodes > self.limits.max_nodes:
            raise _Abort
        if self.stats.nodes & 1023 == 0 and time.perf_counter() - self.t0 > self.limits.max_time:
            raise _Abort

    def offer(self, sol: Solution, sched: Schedule):
        if sched.makespan < self.best_value - EPS:
            self.best_value = sched.makespan
            self.best = (sol, sched)

    def prune(self, lb: float) -> bool:
        if self.use_bounds and lb >= self.best_value - EPS:
            self.stats.pruned += 1
            return True
        return False

    # phase A
    def phase_a(self, state: SearchState):
        self.tick()
        if self.snapshot_hook:
            self.snapshot_hook(state)
        if self.prune(_route_bound(self.ctx, state)):
            return
        ctx = self.ctx
        v = state.next_customer
        if v > ctx.nv:
            self.start_phase_b(state)
            return
        used = sum(1 for r in state.routes if r)
        for subset in self._vehicle_subsets(used):
            slots = [range(len(state.routes[k]) + 1) for k in subset]
            for places in itertools.product(*slots):
                for k, at in zip(subset, places):
                    state.routes[k].insert(at, v)
                state.next_customer = v + 1
                self.phase_a(state)
                state.next_customer = v
                for k, at in zip(subset, places):
                    del state.routes[k][at]

    def _vehicle_subsets(self, used: int):
        nk = self.ctx.nk
        if not self.ctx.split:
            return [(k,) for k in range(min(used + 1, nk))]
        out = []
        for r in range(0, nk - used + 1):
            fresh = tuple(range(used, used + r))
            for size in range(0, used + 1):
                for old in itertools.combinations(range(used), size):
                    if old or fresh:
                        out.append(old + fresh)
        return out

    # phase B
    def start_phase_b(self, state: SearchState):
        ctx = self.ctx
        state.copy_routes = [[self.g.copy_of(k + 1, v) for v in route] for k, route in enumerate(state.routes)]
        counts = {}
        for route in state.routes:
            for v in route:
                counts[v] = counts.get(v, 0) + 1
        state.split_customers = frozenset(v for v, c in counts.items() if c > 1)
        state.pos = [0] * ctx.nk
        state.ready = [0.0] * ctx.nk
        state.last = [0] * ctx.nk
        state.avail = {0: ctx.no}
        try:
            self.insert(state)
        finally:
            state.copy_routes = []
            state.split_customers = frozenset()
            state.order.clear()
            state.position.clear()
            state.avail = {}

    def insert(self, state: SearchState):
        self.tick()
        if self.snapshot_hook:
            self.snapshot_hook(state)
        ctx = self.ctx
        if all(state.pos[k] == len(r) for k, r in enumerate(state.copy_routes)):
            self.leaf(state)
            return
        if self.prune(_insertion_bound(ctx, state)):
            return
        for k, route in enumerate(state.copy_routes):
            if state.pos[k] < len(route):
                self._expand(state, k, route[state.pos[k]])

    def _expand(self, state: SearchState, k: int, j: int):
        ctx = self.ctx
        g = self.g
        v = ctx.orig[j]
        order = state.order
        # nodes after position `need` - 1 must all have smaller ids than j
        q = len(order)
        while q > 0 and order[q - 1] < j:
            q -= 1
        need = q - 1
        prev = state.copy_routes[k][state.pos[k] - 1] if state.pos[k] > 0 else 0
        prev_pos = state.position[prev] if prev else -1
        sources = []
        for loc, cnt in state.avail.items():
            if cnt <= 0:
                continue
            if loc == 0:
                sources.append((0, cnt, -1, ctx.dist[0][v]))
            elif g.gamma.get((loc, j), 0) > 0:
                sources.append((loc, cnt, state.position[loc], state.comp[loc] + ctx.dist[ctx.orig[loc]][v]))
        sources.sort()
        t_prim = state.ready[k] + ctx.dist[ctx.orig[prev]][v]
        split_copy = v in state.split_customers
        for m in range(ctx.b[v], 0, -1):
            s = 0.0 if split_copy else ctx.stime[v][m]
            for pick in _multisets(sources, m):
                if prev_pos < need and max(sources[i][2] for i, _ in pick) < need:
                    continue
                t = t_prim
                for i, _ in pick:
                    t = max(t, sources[i][3])
                self._push(state, k, j, m, t, s, pick, sources, prev)
                self.insert(state)
                self._pop(state, k, j, pick, sources, prev)

    def _push(self, state, k, j, m, t, s, pick, sources, prev):
        state.position[j] = len(state.order)
        state.order.append(j)
        state.start[j] = t
        state.comp[j] = t + s
        state.mode[j] = m
        for i, c in pick:
            loc = sources[i][0]
            state.avail[loc] -= c
            state.moves.append((loc, j, c))
        state.avail[j] = m
        state.pos[k] += 1
        state.saved.append((state.ready[k], state.last[k]))
        state.ready[k] = t + s
        state.last[k] = j

    def _pop(self, state, k, j, pick, sources, prev):
        state.ready[k], state.last[k] = state.saved.pop()
        state.pos[k] -= 1
        del state.avail[j]
        for i, c in reversed(pick):
            state.avail[sources[i][0]] += c
            state.moves.pop()
        del state.mode[j], state.comp[j], state.start[j], state.position[j]
        state.order.pop()

    def leaf(self, state: SearchState):
        self.stats.leaves += 1
        ctx = self.ctx
        value = max(state.comp.values(), default=0.0)
        if value >= self.best_value - EPS:
            # relaxed split durations make this a lower bound, so skip either way
            self.stats.pruned += 1
            return
        sol = self._solution(state)
        if state.split_customers:
            lb = max(_insertion_bound(ctx, state), _split_leaf_bound(ctx, state))
            if lb >= self.best_value - EPS:
                self.stats.pruned += 1
                return
            self.stats.lp_calls += 1
            try:
                plan, sched = optimize_split_times(self.g, sol)
            except SplitInfeasible:
                return
            sol = Solution(sol.routes, sol.flow, plan, sol.policy)
        else:
            sched = compute_schedule(self.g, sol)
        self.offer(sol, sched)

    def _solution(self, state: SearchState) -> Solution:
        ctx = self.ctx
        counts: dict[tuple[int, int], int] = {}
        for loc, j, c in state.moves:
            counts[(loc, j)] = counts.get((loc, j), 0) + c
        for loc, c in state.avail.items():
            if c:
                counts[(loc, self.g.n)] = counts.get((loc, self.g.n), 0) + c
        durations = {}
        for j in state.order:
            v = ctx.orig[j]
            durations[j] = 0.0 if v in state.split_customers else ctx.stime[v][state.mode[j]]
        return Solution(
            routes=tuple(tuple(r) for r in state.copy_routes),
            flow=SupportFlow(counts),
            services=ServicePlan(dict(state.mode), durations),
            policy=self.g.policy,
        )


def _multisets(sources, m):
    """All ways to draw ``m`` vehicles from ``sources`` (index, count) pairs."""
    n = len(sources)
    pick: list[tuple[int, int]] = []

    def rec(i, left):
        if left == 0:
            yield list(pick)
            return
        if i == n:
            return
        cap = min(sources[i][1], left)
        for c in range(cap, -1, -1):
            if c:
                pick.append((i, c))
            yield from rec(i + 1, left - c)
            if c:
                pick.pop()

    yield from rec(0, m)


def root_state(inst: Instance) -> SearchState:
    return SearchState(routes=[[] for _ in range(inst.fleet.primary_count)])


def solve_exact(
    inst: Instance,
    policy: VariantPolicy,
    limits: SearchLimits | None = None,
    use_bounds: bool = True,
) -> SolveResult:
    limits = limits or SearchLimits()
    seed = limits.incumbent or construction_heuristic(inst, policy)
    g = build_graph(inst, policy, big_m=seed[1].makespan)
    search = _Search(g, limits, use_bounds)
    search.offer(*seed)
    state = root_state(inst)
    root_lb = _route_bound(search.ctx, state)
    status = SolveStatus.OPTIMAL
    try:
        search.phase_a(state)
    except _Abort:
        status = SolveStatus.FEASIBLE_LIMIT
    search.stats.time_s = time.perf_counter() - search.t0
    sol, sched = search.best
    lb = sched.makespan if status == SolveStatus.OPTIMAL else min(root_lb, sched.makespan)
    return SolveResult(sol, sched, status, lb, search.stats)


def best_completion(state: SearchState, g: ExpandedGraph, limits: SearchLimits | None = None) -> float:
    """Exhaustive minimum makespan over all completions of ``state`` (no bound pruning)."""
    search = _Search(g, limits or SearchLimits(max_time=3600.0), use_bounds=False)
    state = state.clone()
    if state.in_phase_a:
        search.phase_a(state)
    else:
        search.insert(state)
    return search.best_value


def brute_force(inst: Instance, policy: VariantPolicy) -> SolveResult:
    """Exhaustive oracle for tiny instances; see ``syncvrp.bruteforce``."""
    from .bruteforce import brute_force as run

    return run(inst, policy)

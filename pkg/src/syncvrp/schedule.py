"""Solutions, feasibility checking and earliest-start scheduling.

A solution fixes primary routes over customer copies, an integral support
flow on arcs of the expanded graph, one mode per visited copy and service
durations. Start times follow from the precedence relation formed by the
primary route arcs and every arc carrying support flow; the schedule we
report is the componentwise-minimal one (longest path from node 0).
"""

from __future__ import annotations

import heapq
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .graph import ExpandedGraph, VariantPolicy
from .lp import LpProblem, LpStatus, Relation, solve_lp

TOL = 1e-6

Arc = tuple[int, int]


class CycleInfeasible(Exception):
    """The active arcs of a solution contain a directed cycle."""

    def __init__(self, cycle: list[int]):
        super().__init__(f"precedence cycle through nodes {cycle}")
        self.cycle = cycle


class DecompositionError(ValueError):
    pass


class SplitInfeasible(Exception):
    """No durations meet every demand with the given routes, flow and modes."""


@dataclass(frozen=True)
class SupportFlow:
    counts: Mapping[Arc, int]

    def __post_init__(self):
        clean = {}
        for arc, w in self.counts.items():
            if w != int(w) or w < 0:
                raise ValueError(f"flow on {arc} must be a nonnegative integer, got {w}")
            if w:
                clean[(int(arc[0]), int(arc[1]))] = int(w)
        object.__setattr__(self, "counts", dict(sorted(clean.items())))

    def used(self, arc: Arc) -> bool:
        return self.counts.get(arc, 0) > 0

    def inflow(self, j: int) -> int:
        return sum(w for (_, h), w in self.counts.items() if h == j)

    def outflow(self, i: int) -> int:
        return sum(w for (t, _), w in self.counts.items() if t == i)


@dataclass(frozen=True)
class SupportPaths:
    paths: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ServicePlan:
    mode: Mapping[int, int]
    duration: Mapping[int, float]


@dataclass(frozen=True)
class Solution:
    routes: tuple[tuple[int, ...], ...]
    flow: SupportFlow
    services: ServicePlan
    policy: VariantPolicy

    @property
    def visited(self) -> list[int]:
        return sorted(j for r in self.routes for j in r)

    def primary_arcs(self, g: ExpandedGraph) -> list[Arc]:
        arcs = []
        for route in self.routes:
            if not route:
                continue
            seq = (0,) + tuple(route) + (g.n,)
            arcs.extend(zip(seq, seq[1:]))
        return arcs


@dataclass(frozen=True)
class Schedule:
    start: Mapping[int, float]
    makespan: float


def _service_sum(g: ExpandedGraph, durations: Mapping[int, float], i: int) -> float:
    if i == 0:
        return 0.0
    return sum(durations.get(h, 0.0) for h in g.related[i])


def active_arcs(g: ExpandedGraph, sol: Solution) -> list[Arc]:
    arcs = set(sol.primary_arcs(g))
    arcs.update(a for a, w in sol.flow.counts.items() if w > 0)
    return sorted(arcs)


def topological_order(nodes: Iterable[int], arcs: Iterable[Arc]) -> list[int]:
    """Kahn's algorithm with smallest-id tie-breaking; raises on a cycle."""
    nodes = set(nodes)
    succ = defaultdict(list)
    indeg = {v: 0 for v in nodes}
    for i, j in arcs:
        nodes.update((i, j))
        indeg.setdefault(i, 0)
        indeg[j] = indeg.get(j, 0) + 1
        succ[i].append(j)
    heap = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    if len(order) < len(indeg):
        raise CycleInfeasible(_find_cycle({v for v, d in indeg.items() if d > 0}, succ))
    return order


def _find_cycle(remaining: set[int], succ) -> list[int]:
    # nodes left by Kahn's algorithm may merely sit downstream of a cycle, but
    # each still has an unprocessed predecessor, so walking backwards must loop
    pred = defaultdict(list)
    for v in remaining:
        for w in succ[v]:
            if w in remaining:
                pred[w].append(v)
    seen: dict[int, int] = {}
    path = []
    v = min(remaining)
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = min(pred[v])
    cycle = path[seen[v]:][::-1]
    return cycle + [cycle[0]]


def compute_schedule(g: ExpandedGraph, sol: Solution) -> Schedule:
    arcs = active_arcs(g, sol)
    durations = sol.services.duration
    order = topological_order([0], arcs)
    preds = defaultdict(list)
    for i, j in arcs:
        preds[j].append(i)
    start: dict[int, float] = {0: 0.0}
    for v in order:
        if v == 0 or v == g.n:
            continue
        start[v] = max(
            (start[i] + _service_sum(g, durations, i) + g.tau[(i, v)] for i in preds[v]),
            default=0.0,
        )
    makespan = max((start[i] + _service_sum(g, durations, i) for i in preds[g.n]), default=0.0)
    start[g.n] = makespan
    return Schedule(start=dict(sorted(start.items())), makespan=makespan)


def optimize_split_times(g: ExpandedGraph, sol: Solution) -> tuple[ServicePlan, Schedule]:
    """Choose durations of a fixed split structure that minimise the makespan.

    Variables are one duration per visited copy and one start time per visited
    copy plus the end depot; every active arc contributes a precedence row.
    Any durations already stored on ``sol`` are ignored.
    """
    if not sol.policy.split_allowed:
        raise ValueError("split times only apply when splitting is allowed")
    arcs = active_arcs(g, sol)
    topological_order([0], arcs)
    visited = sol.visited
    modes = sol.services.mode
    s_idx = {j: pos for pos, j in enumerate(visited)}
    t_idx = {j: len(visited) + pos for pos, j in enumerate(visited + [g.n])}
    nvar = 2 * len(visited) + 1

    rows = []
    for i, j in arcs:
        coef = [0.0] * nvar
        coef[t_idx[j]] += 1.0
        if i != 0:
            coef[t_idx[i]] -= 1.0
            for h in g.related[i]:
                if h in s_idx:
                    coef[s_idx[h]] -= 1.0
        rows.append((coef, Relation.GE, g.tau[(i, j)]))
    bounds = [(0.0, 0.0)] * nvar
    for j in visited:
        spec = g.customer(j)
        m = modes.get(j)
        if m is None or not 1 <= m <= spec.max_modes:
            raise SplitInfeasible(f"copy {j} has invalid mode {m}")
        bounds[s_idx[j]] = (0.0, spec.demand / spec.rate(m))
        bounds[t_idx[j]] = (0.0, math.inf)
    bounds[t_idx[g.n]] = (0.0, math.inf)
    for v in range(1, g.instance.num_customers + 1):
        spec = g.instance.customer(v)
        coef = [0.0] * nvar
        for k in range(1, g.num_primary + 1):
            j = g.copy_of(k, v)
            if j in s_idx:
                coef[s_idx[j]] = spec.rate(modes[j])
        rows.append((coef, Relation.EQ, spec.demand))
    objective = [0.0] * nvar
    objective[t_idx[g.n]] = 1.0

    out = solve_lp(LpProblem(objective, rows, bounds))
    if out.status != LpStatus.OPTIMAL:
        raise SplitInfeasible(f"duration LP is {out.status.value}")
    durations = {j: max(0.0, float(out.values[s_idx[j]])) for j in visited}
    plan = ServicePlan(mode=dict(modes), duration=durations)
    timed = Solution(sol.routes, sol.flow, plan, sol.policy)
    return plan, compute_schedule(g, timed)


# -- feasibility -----------------------------------------------------------

@dataclass
class CheckItem:
    family: str
    ok: bool
    detail: str = ""


@dataclass
class FeasibilityReport:
    items: list[CheckItem] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    schedule: Schedule | None = None

    @property
    def feasible(self) -> bool:
        return all(item.ok for item in self.items)

    def failed(self) -> list[str]:
        return [item.family for item in self.items if not item.ok]

    def __str__(self) -> str:
        lines = [f"{'PASS' if it.ok else 'FAIL'} {it.family}" + (f": {it.detail}" if it.detail else "")
                 for it in self.items]
        lines += [f"WARN {w}" for w in self.warnings]
        return "\n".join(lines)


def check_feasibility(inst, g: ExpandedGraph, sol: Solution) -> FeasibilityReport:
    report = FeasibilityReport()

    def record(family: str, problems: list[str]):
        report.items.append(CheckItem(family, not problems, "; ".join(problems[:5])))

    # primary routes: own copies only, each at most once
    problems = []
    if len(sol.routes) != g.num_primary:
        problems.append(f"expected {g.num_primary} routes, got {len(sol.routes)}")
    seen = set()
    for k, route in enumerate(sol.routes, start=1):
        for j in route:
            if g.owner.get(j) != k:
                problems.append(f"copy {j} on route of primary {k}")
            if j in seen:
                problems.append(f"copy {j} visited twice")
            seen.add(j)
    record("route-structure", problems)
    visited = set(seen)

    problems = []
    for v in range(1, inst.num_customers + 1):
        count = sum(1 for k in range(1, g.num_primary + 1) if g.copy_of(k, v) in visited)
        if sol.policy.split_allowed and count < 1:
            problems.append(f"customer {v} not visited")
        if not sol.policy.split_allowed and count != 1:
            problems.append(f"customer {v} visited by {count} copies")
    record("visit-count", problems)

    counts = sol.flow.counts
    record("flow-arcs", [f"arc {a} not in graph" for a in counts if a not in g.tau])
    record(
        "capacity",
        [f"arc {a}: {w} > {g.gamma[a]}" for a, w in counts.items() if a in g.gamma and w > g.gamma[a]],
    )
    problems = []
    if sol.flow.outflow(0) != g.num_support:
        problems.append(f"depot outflow {sol.flow.outflow(0)} != {g.num_support}")
    if sol.flow.inflow(g.n) != g.num_support:
        problems.append(f"end depot inflow {sol.flow.inflow(g.n)} != {g.num_support}")
    record("depot-flow", problems)
    record(
        "flow-conservation",
        [
            f"copy {j}: in {sol.flow.inflow(j)} out {sol.flow.outflow(j)}"
            for j in g.customer_nodes
            if sol.flow.inflow(j) != sol.flow.outflow(j)
        ],
    )

    modes = sol.services.mode
    durations = sol.services.duration
    problems = [f"visited copy {j} has no mode" for j in sorted(visited) if j not in modes]
    problems += [f"unvisited copy {j} has mode {modes[j]}" for j in sorted(modes) if j not in visited]
    record("single-mode", problems)
    record(
        "mode-range",
        [f"copy {j}: mode {m} outside 1..{g.max_mode(j)}" for j, m in sorted(modes.items())
         if j in g.owner and not 1 <= m <= g.max_mode(j)],
    )
    record(
        "mode-inflow",
        [f"copy {j}: mode {modes.get(j, 0)} but support inflow {sol.flow.inflow(j)}"
         for j in g.customer_nodes if modes.get(j, 0) != sol.flow.inflow(j)],
    )

    problems = []
    for j, s in sorted(durations.items()):
        if j not in visited:
            if abs(s) > TOL:
                problems.append(f"unvisited copy {j} has duration {s}")
            continue
        m = modes.get(j)
        if m is None or not 1 <= m <= g.max_mode(j):
            continue
        cap = g.customer(j).demand / g.customer(j).rate(m)
        if s < -TOL or s > cap + TOL:
            problems.append(f"copy {j}: duration {s} outside [0, {cap}]")
        elif abs(s) <= TOL:
            report.warnings.append(f"copy {j} visited with zero duration")
    record("service-bound", problems)

    problems = []
    for v in range(1, inst.num_customers + 1):
        spec = inst.customer(v)
        done = 0.0
        for k in range(1, g.num_primary + 1):
            j = g.copy_of(k, v)
            if j in visited and j in modes and 1 <= modes[j] <= spec.max_modes:
                done += durations.get(j, 0.0) * spec.rate(modes[j])
        if abs(done - spec.demand) > TOL:
            problems.append(f"customer {v}: served {done:.6g} of {spec.demand:.6g}")
    record("demand", problems)

    try:
        report.schedule = compute_schedule(g, sol)
        record("schedule", [])
    except CycleInfeasible as exc:
        record("schedule", [str(exc)])
    return report


# -- flow encodings --------------------------------------------------------

def compose_flow(g: ExpandedGraph, paths: SupportPaths) -> SupportFlow:
    counts: dict[Arc, int] = defaultdict(int)
    for path in paths.paths:
        for arc in zip(path, path[1:]):
            if arc not in g.tau:
                raise ValueError(f"arc {arc} not in graph")
            counts[arc] += 1
    return SupportFlow(dict(counts))


def decompose_flow(g: ExpandedGraph, flow: SupportFlow) -> SupportPaths:
    """Split an integral 0 -> n flow into one simple path per support vehicle."""
    residual = dict(flow.counts)
    succ = defaultdict(list)
    for i, j in sorted(residual):
        succ[i].append(j)
    paths = []
    for _ in range(g.num_support):
        node, path = 0, [0]
        while node != g.n:
            nxt = next((j for j in succ[node] if residual.get((node, j), 0) > 0), None)
            if nxt is None:
                raise DecompositionError(f"flow stops at node {node}; conservation violated")
            residual[(node, nxt)] -= 1
            if nxt in path:
                raise DecompositionError(f"cyclic flow through node {nxt}")
            path.append(nxt)
            node = nxt
        paths.append(tuple(path))
    left = {a: w for a, w in residual.items() if w}
    if left:
        raise DecompositionError(f"flow not decomposable into {g.num_support} paths; left over {left}")
    return SupportPaths(tuple(paths))


# -- JSON ------------------------------------------------------------------

def solution_to_dict(sol: Solution, sched: Schedule | None = None) -> dict:
    doc = {
        "policy": sol.policy.name,
        "routes": [list(r) for r in sol.routes],
        "flow": [[i, j, w] for (i, j), w in sol.flow.counts.items()],
        "modes": {str(j): m for j, m in sorted(sol.services.mode.items())},
        "durations": {str(j): s for j, s in sorted(sol.services.duration.items())},
    }
    if sched is not None:
        doc["schedule"] = {
            "start": {str(j): t for j, t in sched.start.items()},
            "makespan": sched.makespan,
        }
    return doc


def solution_from_dict(doc: dict, policy: VariantPolicy | None = None) -> Solution:
    pol = policy or VariantPolicy.parse(doc["policy"])
    return Solution(
        routes=tuple(tuple(int(j) for j in r) for r in doc["routes"]),
        flow=SupportFlow({(int(i), int(j)): int(w) for i, j, w in doc["flow"]}),
        services=ServicePlan(
            mode={int(j): int(m) for j, m in doc["modes"].items()},
            duration={int(j): float(s) for j, s in doc["durations"].items()},
        ),
        policy=pol,
    )


def dump_solution(sol: Solution, sched: Schedule | None = None, **extra) -> str:
    doc = solution_to_dict(sol, sched)
    doc.update(extra)
    return json.dumps(doc, indent=2) + "\n"

"""Binary-flow and integer-flow MILP models, LP-file export and evaluation.

Rows are named ``family[idx,...]``; the families follow the model's
constraint groups (primary routing, time propagation, demand, modes, visit
rule, support flow) plus optional valid inequalities. In file names the
brackets and commas become underscores and the end depot prints as ``n``.

Closed-form row counts (a = |A|, B = sum of b over customers)::

    outflow_primary_depot        K
    inflow_primary               K V
    outflow_primary              K V
    time_primary                 K ((V + 1)^2 - V)
    demand                       V
    single_mode                  K V
    upper_bound_service          K B
    visit_nosplit / visit_split  V
    set_mode_binary              K V         (binary)
    outflow_support_depot        O           (binary), 1 (integer)
    flow_conservation_binary     K V O
    time_support_binary          O a
    set_mode_integer             K V         (integer)
    flow_conservation_integer    K V
    arc_used                     a
    time_support_integer         a
    lb_primary_workload          K           (cuts)
    lb_primary_routing           K (V + 1)
    lb_arrival                   K (V + 1)
    leave_depot                  K V
    lb_support_workload          1
    ub_support                   V without split, K V with split
    min_flow_on_arc              a           (integer only)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .exact import construction_heuristic
from .graph import ExpandedGraph, Flow, VariantPolicy, cross_fleet_arcs
from .instance import Instance
from .lp import INF, LpProblem, Relation
from .schedule import Schedule, Solution, decompose_flow

TOL = 1e-6

# row families added only when the model is built with valid inequalities
CUT_FAMILIES = (
    "lb_primary_workload", "lb_primary_routing", "lb_arrival", "leave_depot",
    "lb_support_workload", "ub_support", "min_flow_on_arc",
)


class Domain(str, Enum):
    BINARY = "binary"
    INTEGER = "integer"
    CONTINUOUS = "continuous"


# positions of node indices inside each variable's index tuple
_NODE_SLOTS = {"x": (0, 1), "q": (0,), "y": (0,), "t": (0,), "s": (0,), "z": (0, 1), "v": (0, 1), "w": (0, 1)}
_KIND_ORDER = "xqytszvw"


@dataclass(frozen=True, order=True)
class VarRef:
    kind: str
    index: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in _NODE_SLOTS:
            raise ValueError(f"unknown variable kind {self.kind!r}")


@dataclass
class Row:
    name: str
    coefs: dict[int, float]
    sense: Relation
    rhs: float

    @property
    def family(self) -> str:
        return self.name.split("[", 1)[0]

    def activity(self, values) -> float:
        return sum(c * values[i] for i, c in self.coefs.items())

    def violation(self, values) -> float:
        lhs = self.activity(values)
        if self.sense == Relation.LE:
            return max(0.0, lhs - self.rhs)
        if self.sense == Relation.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class MilpModel:
    policy: VariantPolicy
    big_m: float
    with_cuts: bool
    end_node: int
    vars: list[VarRef] = field(default_factory=list)
    domains: list[Domain] = field(default_factory=list)
    bounds: list[tuple[float, float]] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    _index: dict[VarRef, int] = field(default_factory=dict, repr=False)

    def add_var(self, ref: VarRef, domain: Domain, lo: float = 0.0, hi: float = INF) -> int:
        if ref in self._index:
            raise ValueError(f"duplicate variable {ref}")
        self._index[ref] = len(self.vars)
        self.vars.append(ref)
        self.domains.append(domain)
        if domain == Domain.BINARY:
            hi = min(hi, 1.0)
        self.bounds.append((lo, hi))
        return self._index[ref]

    def idx(self, kind: str, *index: int) -> int:
        return self._index[VarRef(kind, tuple(index))]

    def has(self, kind: str, *index: int) -> bool:
        return VarRef(kind, tuple(index)) in self._index

    def add_row(self, family: str, index: Iterable, coefs: Mapping[int, float], sense, rhs: float):
        label = ",".join(self.node_label(i) if isinstance(i, int) else str(i) for i in index)
        merged: dict[int, float] = {}
        for var, c in coefs.items():
            merged[var] = merged.get(var, 0.0) + c
        self.rows.append(Row(f"{family}[{label}]", {k: c for k, c in merged.items() if c != 0.0},
                             Relation(sense), float(rhs)))

    def node_label(self, j: int) -> str:
        return "n" if j == self.end_node else str(j)

    def var_name(self, ref: VarRef) -> str:
        slots = _NODE_SLOTS[ref.kind]
        parts = [self.node_label(x) if p in slots else str(x) for p, x in enumerate(ref.index)]
        return "_".join([ref.kind] + parts)

    def families(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out[r.family] = out.get(r.family, 0) + 1
        return out

    def count(self, kind: str) -> int:
        return sum(1 for v in self.vars if v.kind == kind)

    def relaxation(self) -> LpProblem:
        """Continuous relaxation with the model's own bounds (t, w unbounded above)."""
        nvar = len(self.vars)
        c = np.zeros(nvar)
        for i, a in self.objective.items():
            c[i] = a
        rows = []
        for r in self.rows:
            coef = np.zeros(nvar)
            for i, a in r.coefs.items():
                coef[i] = a
            rows.append((coef, r.sense, r.rhs))
        return LpProblem(c, rows, list(self.bounds))


def _minimal_arcs(g: ExpandedGraph):
    """Arcs carrying x: those inside some N_k, with (0, n) shared."""
    arcs = []
    for k in range(1, g.num_primary + 1):
        nodes = g.nodes_of(k)
        for i in nodes[:-1]:
            for j in nodes[1:]:
                if i != j and (i, j) != (0, g.n):
                    arcs.append((i, j))
    arcs.append((0, g.n))
    return sorted(arcs)


def build_model(inst: Instance, g: ExpandedGraph, with_cuts: bool = False) -> MilpModel:
    pol = g.policy
    if g.instance != inst:
        raise ValueError("graph was built for a different instance")
    n = g.n
    O = g.num_support
    K = g.num_primary
    C = g.customer_nodes
    A = sorted(g.arcs)
    T = g.big_m
    binary_flow = pol.flow == Flow.BINARY
    m = MilpModel(pol, T, with_cuts, n)

    x_arcs = _minimal_arcs(g)
    for i, j in x_arcs:
        m.add_var(VarRef("x", (i, j)), Domain.BINARY)
    for j in C:
        m.add_var(VarRef("q", (j,)), Domain.BINARY)
    for j in C:
        for mode in range(1, g.max_mode(j) + 1):
            m.add_var(VarRef("y", (j, mode)), Domain.BINARY)
    for j in range(0, n + 1):
        m.add_var(VarRef("t", (j,)), Domain.CONTINUOUS)
    for j in C:
        for mode in range(1, g.max_mode(j) + 1):
            m.add_var(VarRef("s", (j, mode)), Domain.CONTINUOUS)
    cross = cross_fleet_arcs(g)
    if binary_flow:
        for i, j in A:
            for o in range(1, O + 1):
                hi = 0.0 if (not pol.switch_allowed and (i, j) in cross) else 1.0
                m.add_var(VarRef("z", (i, j, o)), Domain.BINARY, 0.0, hi)
    else:
        for i, j in A:
            m.add_var(VarRef("v", (i, j)), Domain.BINARY)
        for i, j in A:
            m.add_var(VarRef("w", (i, j)), Domain.INTEGER)

    x = lambda i, j: m.idx("x", i, j)  # noqa: E731
    t = lambda j: m.idx("t", j)  # noqa: E731
    modes = {j: range(1, g.max_mode(j) + 1) for j in C}

    def service(i: int) -> dict[int, float]:
        """Sum of s over the related set of i (nothing for the depot)."""
        if i == 0:
            return {}
        return {m.idx("s", h, mm): 1.0 for h in sorted(g.related[i]) for mm in modes[h]}

    m.objective = {t(n): 1.0}

    # primary routing
    for k in range(1, K + 1):
        Ck = g.copies[k]
        m.add_row("outflow_primary_depot", [k], {x(0, j): 1.0 for j in Ck}, "<=", 1)
    for k in range(1, K + 1):
        Nk = g.nodes_of(k)
        for j in g.copies[k]:
            row = {x(i, j): 1.0 for i in Nk[:-1] if i != j}
            row[m.idx("q", j)] = -1.0
            m.add_row("inflow_primary", [k, j], row, "=", 0)
        for j in g.copies[k]:
            row = {x(j, i): 1.0 for i in Nk[1:] if i != j}
            row[m.idx("q", j)] = -1.0
            m.add_row("outflow_primary", [k, j], row, "=", 0)
    for k in range(1, K + 1):
        Nk = g.nodes_of(k)
        for i in Nk[:-1]:
            for j in Nk[1:]:
                if i == j:
                    continue
                # t_j - t_i - S_i - (tau + T) x_ij >= -T
                row = {t(j): 1.0, t(i): -1.0}
                for var, c in service(i).items():
                    row[var] = row.get(var, 0.0) - c
                row[x(i, j)] = -(g.tau[(i, j)] + T)
                m.add_row("time_primary", [k, i, j], row, ">=", -T)

    # services
    for v in range(1, inst.num_customers + 1):
        spec = inst.customer(v)
        row = {}
        for j in sorted(g.identical[g.copy_of(1, v)]):
            for mm in modes[j]:
                row[m.idx("s", j, mm)] = spec.rate(mm)
        m.add_row("demand", [v], row, "=", spec.demand)
    for j in C:
        row = {m.idx("y", j, mm): 1.0 for mm in modes[j]}
        row[m.idx("q", j)] = -1.0
        m.add_row("single_mode", [j], row, "=", 0)
    for j in C:
        spec = g.customer(j)
        for mm in modes[j]:
            m.add_row("upper_bound_service", [j, mm],
                      {m.idx("s", j, mm): 1.0, m.idx("y", j, mm): -spec.demand / spec.rate(mm)}, "<=", 0)
    fam = "visit_split" if pol.split_allowed else "visit_nosplit"
    for v in range(1, inst.num_customers + 1):
        row = {m.idx("q", j): 1.0 for j in sorted(g.identical[g.copy_of(1, v)])}
        m.add_row(fam, [v], row, ">=" if pol.split_allowed else "=", 1)

    into = {j: [a for a in A if a[1] == j] for j in list(C) + [n]}
    out_of = {i: [a for a in A if a[0] == i] for i in [0] + list(C)}

    if binary_flow:
        z = lambda i, j, o: m.idx("z", i, j, o)  # noqa: E731
        for j in C:
            row = {m.idx("y", j, mm): float(mm) for mm in modes[j]}
            for i, _ in into[j]:
                for o in range(1, O + 1):
                    row[z(i, j, o)] = -1.0
            m.add_row("set_mode_binary", [j], row, "=", 0)
        for o in range(1, O + 1):
            m.add_row("outflow_support_depot", [o], {z(0, j, o): 1.0 for _, j in out_of[0]}, "=", 1)
        for j in C:
            for o in range(1, O + 1):
                row = {z(i, j, o): 1.0 for i, _ in into[j]}
                for _, h in out_of[j]:
                    row[z(j, h, o)] = row.get(z(j, h, o), 0.0) - 1.0
                m.add_row("flow_conservation_binary", [j, o], row, "=", 0)
        for o in range(1, O + 1):
            for i, j in A:
                row = {t(j): 1.0, t(i): -1.0}
                for var, c in service(i).items():
                    row[var] = row.get(var, 0.0) - c
                row[z(i, j, o)] = -(g.tau[(i, j)] + T)
                m.add_row("time_support_binary", [o, i, j], row, ">=", -T)
    else:
        w = lambda i, j: m.idx("w", i, j)  # noqa: E731
        for j in C:
            row = {m.idx("y", j, mm): float(mm) for mm in modes[j]}
            for i, _ in into[j]:
                row[w(i, j)] = -1.0
            m.add_row("set_mode_integer", [j], row, "=", 0)
        m.add_row("outflow_support_depot", [], {w(0, j): 1.0 for _, j in out_of[0]}, "=", O)
        for j in C:
            row = {w(i, j): 1.0 for i, _ in into[j]}
            for _, h in out_of[j]:
                row[w(j, h)] = row.get(w(j, h), 0.0) - 1.0
            m.add_row("flow_conservation_integer", [j], row, "=", 0)
        for i, j in A:
            m.add_row("arc_used", [i, j], {w(i, j): 1.0, m.idx("v", i, j): -float(g.gamma[(i, j)])}, "<=", 0)
        for i, j in A:
            row = {t(j): 1.0, t(i): -1.0}
            for var, c in service(i).items():
                row[var] = row.get(var, 0.0) - c
            row[m.idx("v", i, j)] = -(g.tau[(i, j)] + T)
            m.add_row("time_support_integer", [i, j], row, ">=", -T)

    if with_cuts:
        _add_cuts(m, inst, g, x_arcs, modes, service)
    return m


def _add_cuts(m: MilpModel, inst, g: ExpandedGraph, x_arcs, modes, service):
    n, O, K = g.n, g.num_support, g.num_primary
    A = sorted(g.arcs)
    t = lambda j: m.idx("t", j)  # noqa: E731
    x = lambda i, j: m.idx("x", i, j)  # noqa: E731
    for k in range(1, K + 1):
        Nk = g.nodes_of(k)
        row = {t(n): 1.0}
        for i in Nk[:-1]:
            for j in Nk[1:]:
                if i != j and g.tau[(i, j)]:
                    row[x(i, j)] = row.get(x(i, j), 0.0) - g.tau[(i, j)]
        for j in g.copies[k]:
            for mm in modes[j]:
                row[m.idx("s", j, mm)] = -1.0
        m.add_row("lb_primary_workload", [k], row, ">=", 0)
    for k in range(1, K + 1):
        Nk = g.nodes_of(k)
        for i in Nk[:-1]:
            row = {t(n): 1.0, t(i): -1.0}
            for var, c in service(i).items():
                row[var] = row.get(var, 0.0) - c
            for j in Nk[1:]:
                if j != i:
                    row[x(i, j)] = row.get(x(i, j), 0.0) - (g.tau[(i, j)] + g.tau.get((j, n), 0.0))
            m.add_row("lb_primary_routing", [k, i], row, ">=", 0)
    for k in range(1, K + 1):
        Nk = g.nodes_of(k)
        for j in Nk[1:]:
            row = {t(j): 1.0}
            for i in Nk[:-1]:
                if i != j:
                    row[x(i, j)] = row.get(x(i, j), 0.0) - (g.tau.get((0, i), 0.0) + g.tau[(i, j)])
            m.add_row("lb_arrival", [k, j], row, ">=", 0)
    for k in range(1, K + 1):
        for i in g.copies[k]:
            row = {x(0, j): 1.0 for j in g.copies[k]}
            row[m.idx("q", i)] = row.get(m.idx("q", i), 0.0) - 1.0
            m.add_row("leave_depot", [k, i], row, ">=", 0)

    binary_flow = m.policy.flow == Flow.BINARY
    row = {t(n): float(O)}
    for i, j in A:
        if g.tau[(i, j)]:
            if binary_flow:
                for o in range(1, O + 1):
                    row[m.idx("z", i, j, o)] = -g.tau[(i, j)]
            else:
                row[m.idx("w", i, j)] = -g.tau[(i, j)]
    for j in g.customer_nodes:
        for mm in modes[j]:
            row[m.idx("s", j, mm)] = -float(mm)
    m.add_row("lb_support_workload", [], row, ">=", 0)

    # one row per distinct related set; identical rows for its members are dropped
    seen = set()
    for j in g.customer_nodes:
        rel = g.related[j]
        if rel in seen:
            continue
        seen.add(rel)
        row = {}
        for i in sorted(rel):
            for h, _ in (a for a in A if a[1] == i):
                if binary_flow:
                    for o in range(1, O + 1):
                        row[m.idx("z", h, i, o)] = 1.0
                else:
                    row[m.idx("w", h, i)] = 1.0
        m.add_row("ub_support", [j], row, "<=", min(O, g.max_mode(j)))
    if not binary_flow:
        for i, j in A:
            m.add_row("min_flow_on_arc", [i, j], {m.idx("w", i, j): 1.0, m.idx("v", i, j): -1.0}, ">=", 0)


def estimate_big_m(inst: Instance, policy: VariantPolicy) -> float:
    """Makespan of the construction heuristic; 0 without customers."""
    if inst.num_customers == 0:
        return 0.0
    return construction_heuristic(inst, policy)[1].makespan


# -- evaluation ---------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    name: str
    amount: float


def _values(m: MilpModel, assignment: Mapping[VarRef, float]) -> list[float]:
    vals = []
    for ref in m.vars:
        if ref not in assignment:
            raise KeyError(f"assignment is missing {m.var_name(ref)}")
        vals.append(float(assignment[ref]))
    return vals


def evaluate_model(m: MilpModel, assignment: Mapping[VarRef, float], domains: bool = True,
                   tol: float = TOL) -> list[Violation]:
    """Every row (and, optionally, bound or integrality) violated by more than tol."""
    vals = _values(m, assignment)
    out = [Violation(r.name, amt) for r in m.rows if (amt := r.violation(vals)) > tol]
    if domains:
        for ref, dom, (lo, hi), val in zip(m.vars, m.domains, m.bounds, vals):
            name = m.var_name(ref)
            if val < lo - tol or val > hi + tol:
                out.append(Violation(f"bound[{name}]", max(lo - val, val - hi)))
            if dom != Domain.CONTINUOUS and abs(val - round(val)) > tol:
                out.append(Violation(f"integrality[{name}]", abs(val - round(val))))
    return out


def objective_value(m: MilpModel, assignment: Mapping[VarRef, float]) -> float:
    vals = _values(m, assignment)
    return sum(c * vals[i] for i, c in m.objective.items())


def encode_solution(m: MilpModel, g: ExpandedGraph, sol: Solution, sched: Schedule) -> dict[VarRef, float]:
    """Variable values for a native solution; unvisited copies get t = 0."""
    if sched.makespan > m.big_m + TOL:
        raise ValueError(f"makespan {sched.makespan} exceeds the model's Big-M {m.big_m}")
    a = {ref: 0.0 for ref in m.vars}
    n = g.n
    for route in sol.routes:
        if not route:
            a[VarRef("x", (0, n))] = 1.0
            continue
        path = (0,) + tuple(route) + (n,)
        for i, j in zip(path, path[1:]):
            a[VarRef("x", (i, j))] = 1.0
    for j, mode in sol.services.mode.items():
        a[VarRef("q", (j,))] = 1.0
        a[VarRef("y", (j, mode))] = 1.0
        a[VarRef("s", (j, mode))] = sol.services.duration[j]
    for j, start in sched.start.items():
        if 0 < j < n:
            a[VarRef("t", (j,))] = start
    a[VarRef("t", (n,))] = sched.makespan
    if m.policy.flow == Flow.BINARY:
        paths = decompose_flow(g, sol.flow)
        for o, path in enumerate(paths.paths, start=1):
            for i, j in zip(path, path[1:]):
                a[VarRef("z", (i, j, o))] = 1.0
    else:
        for (i, j), cnt in sol.flow.counts.items():
            a[VarRef("w", (i, j))] = float(cnt)
            a[VarRef("v", (i, j))] = 1.0
    return a


# -- LP file ----------------------------------------------------------------------

_NAME_OK = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_MAX_LINE = 255


def lp_row_name(name: str) -> str:
    return re.sub(r"_+$", "", re.sub(r"[^A-Za-z0-9_]", "_", name))


def _fmt(c: float) -> str:
    # shortest text that parses back to the same double
    c = float(c)
    return str(int(c)) if c.is_integer() and abs(c) < 1e15 else repr(c)


def _terms(m: MilpModel, coefs: Mapping[int, float]) -> list[str]:
    out = []
    for i in sorted(coefs, key=lambda i: (_KIND_ORDER.index(m.vars[i].kind), m.vars[i].index)):
        c = coefs[i]
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        out.append(f"{sign} {m.var_name(m.vars[i])}" if mag == 1.0 else f"{sign} {_fmt(mag)} {m.var_name(m.vars[i])}")
    if out and out[0].startswith("+ "):
        out[0] = out[0][2:]
    return out


def _wrap(head: str, pieces: list[str]) -> list[str]:
    lines, cur = [], head
    for p in pieces:
        if len(cur) + 1 + len(p) > _MAX_LINE:
            lines.append(cur)
            cur = "   " + p
        else:
            cur = f"{cur} {p}" if cur.strip() else cur + p
    lines.append(cur)
    return lines


def export_lp_file(m: MilpModel) -> str:
    """CPLEX-style LP text; t gets the explicit upper bound T."""
    order = sorted(range(len(m.vars)), key=lambda i: (_KIND_ORDER.index(m.vars[i].kind), m.vars[i].index))
    lines = ["Minimize"]
    lines += _wrap(" obj:", _terms(m, m.objective))
    lines.append("Subject To")
    sense = {Relation.LE: "<=", Relation.GE: ">=", Relation.EQ: "="}
    for r in m.rows:
        pieces = _terms(m, r.coefs) or ["0 t_0"]
        pieces += [sense[r.sense], _fmt(r.rhs)]
        lines += _wrap(f" {lp_row_name(r.name)}:", pieces)
    lines.append("Bounds")
    for i in order:
        ref, dom, (lo, hi) = m.vars[i], m.domains[i], m.bounds[i]
        name = m.var_name(ref)
        if ref.kind == "t":
            hi = min(hi, m.big_m)
        if dom == Domain.BINARY and (lo, hi) == (0.0, 1.0):
            continue  # implied by the Binaries section
        if lo == hi:
            lines.append(f" {name} = {_fmt(lo)}")
        elif math.isinf(hi):
            if lo != 0.0:
                lines.append(f" {name} >= {_fmt(lo)}")
        else:
            lines.append(f" {_fmt(lo)} <= {name} <= {_fmt(hi)}")
    for title, dom in (("Binaries", Domain.BINARY), ("Generals", Domain.INTEGER)):
        names = [m.var_name(m.vars[i]) for i in order if m.domains[i] == dom]
        if names:
            lines.append(title)
            lines += _wrap("", names)
    lines.append("End")
    return "\n".join(lines) + "\n"


@dataclass
class ParsedLp:
    objective: dict[str, float]
    rows: dict[str, tuple[dict[str, float], str, float]]
    bounds: dict[str, tuple[float, float]]
    binaries: list[str]
    generals: list[str]


class LpFileError(ValueError):
    pass


def _parse_expr(tokens: list[str], where: str) -> dict[str, float]:
    out: dict[str, float] = {}
    sign, coef = 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
            continue
        except ValueError:
            pass
        if not _NAME_OK.match(tok):
            raise LpFileError(f"{where}: bad variable name {tok!r}")
        out[tok] = out.get(tok, 0.0) + sign * (1.0 if coef is None else coef)
        sign, coef = 1.0, None
    return out


def parse_lp_file(text: str) -> ParsedLp:
    """Reads the subset of the LP format that export_lp_file writes, validating it."""
    section = None
    statements: dict[str, list[str]] = {"obj": [], "st": [], "bounds": [], "bin": [], "gen": []}
    keys = {"minimize": "obj", "subject to": "st", "bounds": "bounds", "binaries": "bin", "generals": "gen"}
    ended = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if len(raw) > _MAX_LINE:
            raise LpFileError(f"line {lineno} longer than {_MAX_LINE} characters")
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        low = line.strip().lower()
        if low in keys:
            section = keys[low]
            continue
        if low == "end":
            ended = True
            break
        if section is None:
            raise LpFileError(f"line {lineno}: content before the objective section")
        if section in ("obj", "st") and line.startswith("   ") and statements[section]:
            statements[section][-1] += " " + line.strip()
        elif section in ("bin", "gen"):
            statements[section] += line.split()
        else:
            statements[section].append(line.strip())
    if not ended:
        raise LpFileError("missing End")
    if len(statements["obj"]) != 1:
        raise LpFileError("expected exactly one objective")
    name, _, expr = statements["obj"][0].partition(":")
    objective = _parse_expr(expr.split(), "objective")
    rows = {}
    for stmt in statements["st"]:
        name, sep, expr = stmt.partition(":")
        name = name.strip()
        if not sep or not _NAME_OK.match(name):
            raise LpFileError(f"bad row name in {stmt[:40]!r}")
        if name in rows:
            raise LpFileError(f"duplicate row {name}")
        tokens = expr.split()
        ops = [p for p, tok in enumerate(tokens) if tok in ("<=", ">=", "=")]
        if len(ops) != 1 or ops[0] != len(tokens) - 2:
            raise LpFileError(f"row {name}: expected 'expr op rhs'")
        rows[name] = (_parse_expr(tokens[:-2], name), tokens[-2], float(tokens[-1]))
    bounds = {}
    for stmt in statements["bounds"]:
        tokens = stmt.split()
        if len(tokens) == 5 and tokens[1] == tokens[3] == "<=":
            bounds[tokens[2]] = (float(tokens[0]), float(tokens[4]))
        elif len(tokens) == 3 and tokens[1] == "=":
            bounds[tokens[0]] = (float(tokens[2]), float(tokens[2]))
        elif len(tokens) == 3 and tokens[1] == ">=":
            bounds[tokens[0]] = (float(tokens[2]), INF)
        else:
            raise LpFileError(f"unsupported bound {stmt!r}")
    for nm in statements["bin"] + statements["gen"] + list(bounds):
        if not _NAME_OK.match(nm):
            raise LpFileError(f"bad variable name {nm!r}")
    return ParsedLp(objective, rows, bounds, statements["bin"], statements["gen"])

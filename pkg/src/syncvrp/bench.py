"""Command line front-end and experiment harness.

Exit codes: 0 success, 1 infeasible or invalid input, 2 usage error,
3 search limit reached before optimality was proven (best plan still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from statistics import mean

from .exact import SearchLimits, SolveStatus, solve_exact
from .graph import STUDY_POLICIES, Flow, VariantPolicy, build_graph
from .instance import GenConfig, InstanceError, InstanceParseError, generate_instance, read_instance, write_instance
from .milp import build_model, estimate_big_m, export_lp_file
from .schedule import check_feasibility, dump_solution, solution_from_dict

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3

CSV_HEADER = ["instance", "policy", "makespan", "lower_bound", "gap", "status", "nodes", "time_s"]
REFERENCE_POLICY = "I|S|N"

# configurations of the computational study: |K| -> list of |O|
STUDY_GRID = {2: (4, 5, 6, 7), 3: (6, 7, 8, 9), 4: (8, 9, 10, 11)}


@dataclass(frozen=True)
class RunRecord:
    instance: str
    policy: str
    makespan: float
    lower_bound: float
    status: str
    nodes: int
    time_s: float

    def __post_init__(self):
        if self.makespan < self.lower_bound - 1e-6:
            raise ValueError(f"{self.instance} {self.policy}: makespan below lower bound")

    @property
    def gap(self) -> float:
        return 0.0 if self.makespan <= 0 else max(0.0, (self.makespan - self.lower_bound) / self.makespan)

    @property
    def num_customers(self) -> int:
        return int(self.instance.split("-", 1)[0])

    def row(self) -> list[str]:
        return [self.instance, self.policy, f"{self.makespan:.6f}", f"{self.lower_bound:.6f}",
                f"{self.gap:.6f}", self.status, str(self.nodes), f"{self.time_s:.3f}"]


def write_records(records, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(records, key=lambda r: (r.instance, r.policy)):
        w.writerow(r.row())


def read_records(text: str) -> list[RunRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [RunRecord(r["instance"], r["policy"], float(r["makespan"]), float(r["lower_bound"]),
                      r["status"], int(r["nodes"]), float(r["time_s"])) for r in rows]


@dataclass(frozen=True)
class SummaryRow:
    num_customers: int
    policy: str
    runs: int
    mean_time: float
    mean_gap: float
    optimal: int
    best: int


def summarize(records: list[RunRecord]) -> list[SummaryRow]:
    """Per (|V|, policy): mean time, mean gap, optimal count and best-solution count.

    A variant counts as best on an instance when its makespan is within 1e-6
    of the smallest makespan any variant found there, so ties count for all.
    """
    if not records:
        raise ValueError("no records to summarize")
    best_on = defaultdict(lambda: float("inf"))
    for r in records:
        best_on[r.instance] = min(best_on[r.instance], r.makespan)
    groups = defaultdict(list)
    for r in records:
        groups[(r.num_customers, r.policy)].append(r)
    out = []
    for (nv, pol), rs in sorted(groups.items()):
        out.append(SummaryRow(
            nv, pol, len(rs),
            mean(r.time_s for r in rs),
            mean(r.gap for r in rs),
            sum(r.status == SolveStatus.OPTIMAL.value for r in rs),
            sum(r.makespan <= best_on[r.instance] + 1e-6 for r in rs),
        ))
    return out


def format_summary(rows: list[SummaryRow]) -> str:
    lines = [f"{'|V|':>4} {'policy':<6} {'time_s':>9} {'gap':>8} {'optimal':>8} {'best':>6}"]
    for s in rows:
        lines.append(f"{s.num_customers:>4} {s.policy:<6} {s.mean_time:>9.3f} {s.mean_gap:>8.4f} "
                     f"{s.optimal:>4}/{s.runs:<3} {s.best:>3}/{s.runs}")
    return "\n".join(lines)


def compare(records: list[RunRecord], reference: str = REFERENCE_POLICY) -> list[tuple[str, str, float]]:
    """Relative makespan change (percent) of every variant against the reference policy."""
    ref = {r.instance: r.makespan for r in records if r.policy == reference}
    out = []
    for r in sorted(records, key=lambda r: (r.instance, r.policy)):
        if r.policy == reference or r.instance not in ref:
            continue
        base = ref[r.instance]
        change = 0.0 if base == 0 else 100.0 * (r.makespan - base) / base
        out.append((r.instance, r.policy, change))
    return out


# -- commands ---------------------------------------------------------------------

def _policy(text: str) -> VariantPolicy:
    try:
        return VariantPolicy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _limits(args) -> SearchLimits:
    return SearchLimits(max_nodes=args.node_limit, max_time=args.time_limit)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_instance(path: str):
    return read_instance(Path(path).read_bytes())


def cmd_gen(args) -> int:
    inst = generate_instance(GenConfig(args.customers, args.primary, args.support,
                                       plane_size=args.plane_size, seed=args.seed))
    fname = f"{inst.label}_s{args.seed}.json"
    target = Path(args.out) if args.out else Path(fname)
    if target.is_dir():
        target = target / fname
    target.write_bytes(write_instance(inst))
    print(target)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    res = solve_exact(inst, args.policy, _limits(args), use_bounds=args.cuts)
    if res.solution is None:
        print("infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    _emit(dump_solution(res.solution, res.schedule, status=res.status.value, lower_bound=res.lower_bound,
                        nodes=res.stats.nodes, time_s=res.stats.time_s), args.out)
    print(f"{inst.name} {args.policy.name} makespan {res.makespan:.6f} ({res.status.value})", file=sys.stderr)
    return EXIT_OK if res.status == SolveStatus.OPTIMAL else EXIT_LIMIT


def cmd_check(args) -> int:
    inst = _load_instance(args.instance)
    doc = json.loads(Path(args.solution).read_text(encoding="utf-8"))
    sol = solution_from_dict(doc, args.policy)
    g = build_graph(inst, sol.policy, big_m=float("inf"))
    report = check_feasibility(inst, g, sol)
    print(report)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_export(args) -> int:
    inst = _load_instance(args.instance)
    pol = VariantPolicy(Flow(args.flow), args.switch, args.split)
    g = build_graph(inst, pol, estimate_big_m(inst, pol))
    _emit(export_lp_file(build_model(inst, g, args.cuts)), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    grid = dict(STUDY_GRID)
    if args.primary:
        grid = {k: STUDY_GRID.get(k, (2 * k,)) for k in args.primary}
    if args.support:
        grid = {k: tuple(args.support) for k in grid}
    policies = args.policy or list(STUDY_POLICIES)
    records = []
    limited = False
    for nv in args.customers:
        for nk, supports in sorted(grid.items()):
            for no in supports:
                for rep in range(args.instances):
                    inst = generate_instance(GenConfig(nv, nk, no, seed=args.seed + rep))
                    for pol in policies:
                        res = solve_exact(inst, pol, _limits(args), use_bounds=args.cuts)
                        limited |= res.status != SolveStatus.OPTIMAL
                        records.append(RunRecord(inst.name, pol.name, res.makespan, res.lower_bound,
                                                 res.status.value, res.stats.nodes, res.stats.time_s))
                        print(f"{inst.name} {pol.name} {res.makespan:.3f} {res.status.value}", file=sys.stderr)
    buf = io.StringIO()
    write_records(records, buf)
    _emit(buf.getvalue(), args.out)
    print(format_summary(summarize(records)), file=sys.stderr)
    return EXIT_LIMIT if limited else EXIT_OK


def cmd_compare(args) -> int:
    records = read_records(Path(args.records).read_text(encoding="utf-8"))
    rows = compare(records, args.reference)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", "policy", "relative_change_pct"])
    for inst, pol, change in rows:
        w.writerow([inst, pol, f"{change:.4f}"])
    _emit(buf.getvalue(), args.out)
    by_policy = defaultdict(list)
    for _, pol, change in rows:
        by_policy[pol].append(change)
    for pol, changes in sorted(by_policy.items()):
        print(f"{pol}: mean change {mean(changes):+.3f}% over {len(changes)} instances", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="syncvrp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def limits(sp):
        sp.add_argument("--time-limit", type=float, default=60.0, help="seconds per solve")
        sp.add_argument("--node-limit", type=int, default=50_000_000)
        sp.add_argument("--cuts", action=argparse.BooleanOptionalAction, default=True,
                        help="prune the search with the valid-inequality bounds")

    sp = sub.add_parser("gen", help="generate a random instance")
    sp.add_argument("--customers", type=int, required=True)
    sp.add_argument("--primary", type=int, required=True)
    sp.add_argument("--support", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--plane-size", type=float, default=100.0)
    sp.add_argument("--out", help="file or directory (default: ./<label>_s<seed>.json)")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("solve", help="solve an instance exactly")
    sp.add_argument("instance")
    sp.add_argument("--policy", type=_policy, default=VariantPolicy.parse(REFERENCE_POLICY))
    sp.add_argument("--out")
    limits(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("check", help="validate a solution file")
    sp.add_argument("instance")
    sp.add_argument("solution")
    sp.add_argument("--policy", type=_policy, help="override the policy stored in the solution")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("export-lp", help="write the MILP as an LP file")
    sp.add_argument("instance")
    sp.add_argument("--flow", choices=["B", "I"], default="I")
    sp.add_argument("--switch", action="store_true")
    sp.add_argument("--split", action="store_true")
    sp.add_argument("--cuts", action=argparse.BooleanOptionalAction, default=False)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_export)

    sp = sub.add_parser("bench", help="run a configuration grid and write CSV")
    sp.add_argument("--customers", type=_int_list, default=[5])
    sp.add_argument("--primary", type=_int_list, help="override |K| values of the grid")
    sp.add_argument("--support", type=_int_list, help="override |O| values of the grid")
    sp.add_argument("--instances", type=int, default=1, help="instances per configuration")
    sp.add_argument("--policy", type=_policy, action="append", help="repeatable; default: the four variants")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    limits(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("compare", help="relative makespan change against a reference variant")
    sp.add_argument("records", help="CSV written by bench")
    sp.add_argument("--reference", default=REFERENCE_POLICY)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_compare)
    return p


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceParseError, InstanceError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(cli_main())

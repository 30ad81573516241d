"""Expanded graph with one copy of every customer per primary vehicle.

Copy of original customer ``v`` for primary vehicle ``k`` (both 1-based) is
node ``(k - 1) * |V| + v``; node 0 is the start depot and ``n = |V||K| + 1``
the end depot.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

from .instance import Instance


class Flow(str, Enum):
    BINARY = "B"
    INTEGER = "I"


@dataclass(frozen=True)
class VariantPolicy:
    flow: Flow = Flow.INTEGER
    switch_allowed: bool = True
    split_allowed: bool = False

    @property
    def name(self) -> str:
        return f"{self.flow.value}|{'S' if self.switch_allowed else 'N'}|{'S' if self.split_allowed else 'N'}"

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, text: str) -> "VariantPolicy":
        m = re.fullmatch(r"\s*([BI])\s*\|\s*([SN])\s*\|\s*([SN])\s*", text.upper())
        if not m:
            raise ValueError(f"policy must look like I|S|N, got {text!r}")
        return cls(Flow(m.group(1)), m.group(2) == "S", m.group(3) == "S")

    def with_flow(self, flow: Flow) -> "VariantPolicy":
        return VariantPolicy(flow, self.switch_allowed, self.split_allowed)


# the four variants compared in the experiments
STUDY_POLICIES = tuple(VariantPolicy.parse(p) for p in ("I|N|N", "I|N|S", "I|S|N", "I|S|S"))


@dataclass(frozen=True, eq=False)
class ExpandedGraph:
    instance: Instance
    policy: VariantPolicy
    big_m: float
    n: int
    copies: dict[int, tuple[int, ...]]
    owner: dict[int, int]
    original_of: dict[int, int]
    identical: dict[int, frozenset[int]]
    related: dict[int, frozenset[int]]
    tau: dict[tuple[int, int], float]
    gamma: dict[tuple[int, int], int]

    @property
    def arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple(self.tau)

    @cached_property
    def customer_nodes(self) -> tuple[int, ...]:
        return tuple(range(1, self.n))

    @property
    def num_primary(self) -> int:
        return self.instance.fleet.primary_count

    @property
    def num_support(self) -> int:
        return self.instance.fleet.support_count

    def copy_of(self, k: int, v: int) -> int:
        return (k - 1) * self.instance.num_customers + v

    def nodes_of(self, k: int) -> tuple[int, ...]:
        """N_k = {0} + C_k + {n}."""
        return (0,) + self.copies[k] + (self.n,)

    def has_arc(self, i: int, j: int) -> bool:
        return (i, j) in self.tau

    def customer(self, j: int):
        return self.instance.customer(self.original_of[j])

    def max_mode(self, j: int) -> int:
        return self.customer(j).max_modes

    def __eq__(self, other):
        if not isinstance(other, ExpandedGraph):
            return NotImplemented
        return all(
            getattr(self, f) == getattr(other, f)
            for f in ("instance", "policy", "big_m", "n", "copies", "owner", "original_of",
                      "identical", "related", "tau", "gamma")
        )

    __hash__ = None


def build_graph(inst: Instance, policy: VariantPolicy, big_m: float) -> ExpandedGraph:
    nv = inst.num_customers
    nk = inst.fleet.primary_count
    no = inst.fleet.support_count
    n = nv * nk + 1

    copies: dict[int, tuple[int, ...]] = {}
    owner: dict[int, int] = {}
    original_of: dict[int, int] = {}
    for k in range(1, nk + 1):
        copies[k] = tuple((k - 1) * nv + v for v in range(1, nv + 1))
        for v in range(1, nv + 1):
            j = (k - 1) * nv + v
            owner[j] = k
            original_of[j] = v

    identical = {
        j: frozenset((k - 1) * nv + original_of[j] for k in range(1, nk + 1)) for j in owner
    }
    if policy.split_allowed:
        related = {j: frozenset((j,)) for j in owner}
    else:
        related = dict(identical)

    def loc(node: int) -> int:
        return 0 if node in (0, n) else original_of[node]

    tau: dict[tuple[int, int], float] = {}
    gamma: dict[tuple[int, int], int] = {}
    tails = [0] + list(range(1, n))
    heads = list(range(1, n)) + [n]
    for i in tails:
        for j in heads:
            if i == j or (i != 0 and j != n and j in identical[i]):
                continue
            tau[(i, j)] = 0.0 if j == n else inst.distance(loc(i), loc(j))
            if j == n:
                cap = no
            else:
                cap = min(no, inst.customer(original_of[j]).max_modes)
                if not policy.switch_allowed and i != 0 and owner[i] != owner[j]:
                    cap = 0
            gamma[(i, j)] = cap

    return ExpandedGraph(
        instance=inst,
        policy=policy,
        big_m=float(big_m),
        n=n,
        copies=copies,
        owner=owner,
        original_of=original_of,
        identical=identical,
        related=related,
        tau=tau,
        gamma=gamma,
    )


def cross_fleet_arcs(g: ExpandedGraph) -> set[tuple[int, int]]:
    """Arcs leaving some C_k towards a customer copy outside C_k."""
    return {
        (i, j)
        for (i, j) in g.tau
        if i in g.owner and j != g.n and g.owner[i] != g.owner.get(j)
    }

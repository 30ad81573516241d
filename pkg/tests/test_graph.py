from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from syncvrp.graph import STUDY_POLICIES, Flow, VariantPolicy, build_graph, cross_fleet_arcs
from syncvrp.instance import GenConfig, generate_instance, travel_time

policies = st.builds(VariantPolicy, st.sampled_from(list(Flow)), st.booleans(), st.booleans())


def inst_of(nv, nk, no, seed=0):
    return generate_instance(GenConfig(nv, nk, no, seed=seed))


def test_policy_names():
    assert [p.name for p in STUDY_POLICIES] == ["I|N|N", "I|N|S", "I|S|N", "I|S|S"]
    assert VariantPolicy.parse("b|n|s") == VariantPolicy(Flow.BINARY, False, True)
    assert VariantPolicy.parse("I|S|N").with_flow(Flow.BINARY).name == "B|S|N"
    with pytest.raises(ValueError):
        VariantPolicy.parse("X|S|N")


def test_three_customers_two_vehicles():
    g = build_graph(inst_of(3, 2, 2), VariantPolicy.parse("I|S|N"), 100.0)
    assert g.n == 7
    assert g.copies == {1: (1, 2, 3), 2: (4, 5, 6)}
    assert g.identical[1] == {1, 4} == g.identical[4]
    assert g.related[1] == {1, 4}
    split = build_graph(g.instance, VariantPolicy.parse("I|S|S"), 100.0)
    assert split.related[1] == {1} and split.related[4] == {4}


def test_switch_disabled_capacities():
    inst = inst_of(3, 2, 3)
    g = build_graph(inst, VariantPolicy.parse("I|N|N"), 100.0)
    assert g.gamma[(1, 5)] == 0
    assert g.gamma[(1, 7)] == 3
    assert g.gamma[(0, 5)] > 0
    assert not g.has_arc(1, 4)


def test_cross_fleet_arcs():
    pol = VariantPolicy.parse("I|S|N")
    assert cross_fleet_arcs(build_graph(inst_of(3, 1, 2), pol, 1.0)) == set()
    arcs = cross_fleet_arcs(build_graph(inst_of(3, 2, 2), pol, 1.0))
    assert (1, 5) in arcs and (4, 2) in arcs
    assert (1, 2) not in arcs and (1, 4) not in arcs
    assert len(arcs) == 12


def _expected_arcs(nv, nk):
    # straight from the definition, independent of the builder's loops
    n = nv * nk + 1
    orig = {j: (j - 1) % nv + 1 for j in range(1, n)}
    out = set()
    for i in range(n):
        for j in range(1, n + 1):
            if i == j:
                continue
            if i in orig and j in orig and orig[i] == orig[j]:
                continue
            out.add((i, j))
    return out


@given(st.integers(0, 4), st.integers(1, 3), st.integers(1, 4), policies, st.integers(0, 99))
def test_graph_invariants(nv, nk, no, pol, seed):
    inst = inst_of(nv, nk, no, seed)
    g = build_graph(inst, pol, 50.0)
    assert g.n == nv * nk + 1
    assert set(g.arcs) == _expected_arcs(nv, nk)
    union = set().union(*g.copies.values()) if g.copies else set()
    assert union | {0, g.n} == set(range(g.n + 1))
    assert sum(len(c) for c in g.copies.values()) == len(union)
    for j in g.owner:
        assert j in g.identical[j]
        assert g.identical[j] == {g.copy_of(k, g.original_of[j]) for k in range(1, nk + 1)}
        assert g.related[j] == ({j} if pol.split_allowed else g.identical[j])
    for (i, j), t in g.tau.items():
        if j == g.n:
            assert t == 0.0 and g.gamma[(i, j)] == no
            continue
        a = inst.location(g.original_of.get(i, 0))
        assert t == travel_time(a, inst.location(g.original_of[j]))
        cap = min(no, g.max_mode(j))
        if not pol.switch_allowed and (i, j) in cross_fleet_arcs(g):
            cap = 0
        assert g.gamma[(i, j)] == cap


@given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 4), policies)
def test_split_toggle_only_changes_related(nv, nk, no, pol):
    inst = inst_of(nv, nk, no)
    a = build_graph(inst, pol, 10.0)
    b = build_graph(inst, replace(pol, split_allowed=not pol.split_allowed), 10.0)
    assert a.related != b.related or nk == 1
    assert replace(b, policy=a.policy, related=a.related) == a

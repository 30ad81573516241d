import pytest
from hypothesis import HealthCheck, settings

from syncvrp.graph import VariantPolicy, build_graph
from syncvrp.instance import CustomerSpec, FleetConfig, Instance, Point
from syncvrp.schedule import ServicePlan, Solution, SupportFlow, SupportPaths, compose_flow

settings.register_profile(
    "repo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def make_instance(customers, depot=(0.0, 0.0), primary=1, support=1, name="hand"):
    """customers: iterable of (x, y, demand, max_modes)."""
    specs = tuple(
        CustomerSpec(v, Point(x, y), float(d), b) for v, (x, y, d, b) in enumerate(customers, start=1)
    )
    return Instance(Point(*depot), specs, FleetConfig(primary, support), name)


# Five-customer harvest example: two harvesters, four trucks; coordinates
# scaled by 10 from the hand drawing.
HARVEST_CUSTOMERS = [
    (52.78166920551097, 35.2596613168603, 44, 3),
    (9.55688582726976, 62.97792780330559, 30, 2),
    (46.50874639515099, 4.015031441951322, 23, 4),
    (31.087384857087086, 16.295039466773518, 43, 3),
    (1.3325110272505825, 29.447394749923026, 31, 4),
]
HARVEST_DEPOT = (36.587566928488315, 47.67929109149463)


@pytest.fixture
def harvest():
    return make_instance(HARVEST_CUSTOMERS, HARVEST_DEPOT, primary=2, support=4, name="harvest")


def harvest_solution(inst, policy):
    """Primary 1 serves 1, 4, 3; primary 2 serves 2, 5; one support vehicle switches 2 -> 4."""
    g = build_graph(inst, policy, big_m=1e6)
    c = g.copy_of
    a, b, c3, c4 = c(1, 1), c(1, 4), c(1, 3), c(2, 2)
    c5 = c(2, 5)
    paths = SupportPaths((
        (0, a, b, c3, g.n),
        (0, a, b, c3, g.n),
        (0, c4, b, c3, g.n),
        (0, c4, c5, g.n),
    ))
    modes = {a: 2, c4: 2, b: 3, c3: 3, c5: 1}
    durations = {j: inst.customer(g.original_of[j]).demand / inst.customer(g.original_of[j]).rate(m)
                 for j, m in modes.items()}
    sol = Solution(((a, b, c3), (c4, c5)), compose_flow(g, paths), ServicePlan(modes, durations), policy)
    return g, sol


@pytest.fixture
def isn():
    return VariantPolicy.parse("I|S|N")


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)

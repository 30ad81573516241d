import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from syncvrp.instance import (
    CustomerSpec,
    GenConfig,
    InstanceError,
    InstanceParseError,
    Point,
    default_productivity,
    generate_instance,
    mode_service_time,
    read_instance,
    travel_time,
    write_instance,
)

# hundredths on a bounded plane; avoids subnormal squares that underflow to 0
coords = st.integers(-100_000, 100_000).map(lambda i: i / 100)
points = st.builds(Point, coords, coords)


def spec(d, b, **kw):
    return CustomerSpec(1, Point(0, 0), d, b, **kw)


def test_travel_time_examples():
    assert travel_time(Point(0, 0), Point(3, 4)) == 5.0
    assert travel_time(Point(7, 7), Point(7, 7)) == 0.0
    # mpmath sqrt(2) at 30 digits
    assert travel_time(Point(0, 0), Point(1, 1)) == pytest.approx(1.41421356237309504880, abs=1e-15)


@given(points, points, points)
def test_travel_time_metric(a, b, c):
    assert travel_time(a, b) == travel_time(b, a) >= 0
    assert travel_time(a, c) <= travel_time(a, b) + travel_time(b, c) + 1e-9
    assert (travel_time(a, b) == 0) == (a == b)


def test_default_productivity():
    assert default_productivity(3, 3) == 1.0
    assert default_productivity(3, 1) == pytest.approx(1 / 3)
    assert 44 / default_productivity(3, 1) == pytest.approx(132)
    assert 23 / default_productivity(4, 3) == pytest.approx(30.67, abs=0.005)
    with pytest.raises(ValueError):
        default_productivity(3, 4)
    with pytest.raises(ValueError):
        default_productivity(3, 0)


def test_mode_service_time_examples():
    assert mode_service_time(spec(30, 2), 1) == 60
    assert mode_service_time(spec(31, 4), 4) == 31
    assert mode_service_time(spec(43, 3), 2) == pytest.approx(64.5)
    with pytest.raises(ValueError):
        mode_service_time(spec(43, 3), 4)


@given(st.integers(1, 500), st.integers(1, 8), st.data())
def test_service_time_times_mode_is_constant(d, b, data):
    m = data.draw(st.integers(1, b))
    s = spec(float(d), b)
    assert math.isclose(mode_service_time(s, m) * m, d * b, rel_tol=1e-9)
    if m < b:
        assert mode_service_time(s, m) > mode_service_time(s, m + 1)


def test_generator_determinism_and_label():
    cfg = GenConfig(5, 2, 4, seed=11)
    a, b = generate_instance(cfg), generate_instance(cfg)
    assert write_instance(a) == write_instance(b)
    assert a.label == "05-02-04"
    assert a.name.startswith("05-02-04")


def test_generator_ranges():
    demands, modes = set(), set()
    for seed in range(100):
        inst = generate_instance(GenConfig(10, 1, 1, seed=seed))
        for c in inst.customers:
            assert 0 <= c.location.x <= 100 and 0 <= c.location.y <= 100
            demands.add(c.demand)
            modes.add(c.max_modes)
    assert min(demands) >= 20 and max(demands) <= 50
    assert all(d == int(d) for d in demands)
    assert modes == {2, 3, 4}


@given(st.integers(0, 2**63 - 1), st.integers(0, 6), st.integers(1, 3), st.integers(1, 4))
def test_round_trip(seed, nv, nk, no):
    inst = generate_instance(GenConfig(nv, nk, no, seed=seed))
    assert read_instance(write_instance(inst)) == inst


def _doc(**customer):
    base = {"id": 1, "loc": [1, 2], "demand": 30, "max_modes": 2}
    base.update(customer)
    return json.dumps({"name": "x", "depot": [0, 0], "customers": [base], "fleet": {"primary": 1, "support": 1}})


def test_read_rejects_invariant_violations():
    with pytest.raises(InstanceError, match="demand"):
        read_instance(_doc(demand=0))
    with pytest.raises(InstanceError, match="productivity monotone"):
        read_instance(_doc(productivity=[0.5, 0.4]))
    with pytest.raises(InstanceError, match="productivity"):
        read_instance(_doc(productivity=[0.5, 0.9]))


def test_read_custom_productivity_round_trip():
    inst = read_instance(_doc(productivity=[0.7, 1.0]))
    assert inst.customer(1).productivity == (0.7, 1.0)
    assert read_instance(write_instance(inst)) == inst


def test_parse_error_has_location():
    with pytest.raises(InstanceParseError) as err:
        read_instance(b'{"depot": [0, 0],\n "customers": [}')
    assert err.value.line == 2
    with pytest.raises(InstanceParseError, match="fleet"):
        read_instance(b'{"depot": [0, 0], "customers": []}')


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        GenConfig(3, 0, 1)
    with pytest.raises(ValueError):
        GenConfig(3, 1, 1, demand_range=(30, 20))

import json
import warnings

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import min_cut_enumerated
from qnetcap.capacity import BoundKind
from qnetcap.config import channel_from_spec
from qnetcap.errors import ChannelError, ConfigError, DomainError, NodeNotFound, TooLarge
from qnetcap.network import (
    Network,
    brute_force_min_cut,
    capacities_from_channels,
    flooding_capacity,
    min_cut_between_sets,
    single_path_capacity,
)


@st.composite
def graphs(draw, max_nodes=8, max_edges=14):
    n = draw(st.integers(2, max_nodes))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1])
    raw = draw(st.lists(pairs, max_size=max_edges))
    caps = draw(st.lists(st.floats(0.0, 5.0, allow_nan=False), min_size=len(raw), max_size=len(raw)))
    net = Network(range(n), [(u, v, c) for (u, v), c in zip(raw, caps)])
    a, b = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
    return net, a, b


def chain():
    return Network(["a", "m", "b"], [("a", "m", 2.0), ("m", "b", 1.0)])


def test_chain():
    net = chain()
    p = single_path_capacity(net, "a", "b")
    assert p.value == 1.0 and p.route == ("a", "m", "b")
    f = flooding_capacity(net, "a", "b")
    assert f.value == 1.0
    assert f.min_cut.A == {"a", "m"}
    assert brute_force_min_cut(net, "a", "b").multi_edge_capacity == 1.0
    assert brute_force_min_cut(net, "a", "b", "single").single_edge_capacity == 1.0


def test_parallel_edges():
    net = Network(["a", "b"], [("a", "b", 1.0), ("a", "b", 1.0)])
    assert flooding_capacity(net, "a", "b").value == 2.0
    assert single_path_capacity(net, "a", "b").value == 1.0
    assert len(flooding_capacity(net, "a", "b").min_cut.cut_set) == 2


def test_disconnected_pair():
    net = Network(["a", "b", "c"], [("a", "c", 3.0)])
    p = single_path_capacity(net, "a", "b")
    assert p.value == 0.0 and p.route == ()
    f = flooding_capacity(net, "a", "b")
    assert f.value == 0.0
    f.min_cut.check(net, "a", "b")


def test_zero_capacity_edges_not_traversed():
    net = Network(["a", "b"], [("a", "b", 0.0)])
    assert single_path_capacity(net, "a", "b").route == ()


def test_invalid_inputs():
    net = chain()
    with pytest.raises(NodeNotFound):
        flooding_capacity(net, "a", "zz")
    with pytest.raises(DomainError):
        flooding_capacity(net, "a", "a")
    with pytest.raises(DomainError):
        Network(["a"], [("a", "a", 1.0)])
    with pytest.raises(DomainError):
        Network(["a", "b"], [("a", "b", -1.0)])
    with pytest.raises(DomainError):
        Network(["a", "b"], [("a", "b", float("inf"))])
    with pytest.raises(DomainError):
        brute_force_min_cut(net, "a", "b", "both")


def test_brute_force_guard():
    net = Network(range(21), [(i, i + 1, 1.0) for i in range(20)])
    with pytest.raises(TooLarge):
        brute_force_min_cut(net, 0, 20)
    # the polynomial engine has no such limit
    assert flooding_capacity(net, 0, 20).value == 1.0


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_against_enumeration(case):
    net, a, b = case
    multi, single = min_cut_enumerated(net, a, b)
    f = flooding_capacity(net, a, b)
    p = single_path_capacity(net, a, b)
    assert f.value == pytest.approx(multi, abs=1e-9)
    assert p.value == pytest.approx(single, abs=1e-9)
    assert brute_force_min_cut(net, a, b, "multi").multi_edge_capacity == pytest.approx(multi, abs=1e-9)
    assert brute_force_min_cut(net, a, b, "single").single_edge_capacity == pytest.approx(single, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(graphs())
def test_duality_and_cut_validity(case):
    net, a, b = case
    f = flooding_capacity(net, a, b)
    f.min_cut.check(net, a, b)
    assert abs(f.min_cut.multi_edge_capacity - f.value) <= 1e-9
    brute_force_min_cut(net, a, b).check(net, a, b)


@settings(max_examples=100, deadline=None)
@given(graphs())
def test_single_path_never_beats_flooding(case):
    net, a, b = case
    assert single_path_capacity(net, a, b).value <= flooding_capacity(net, a, b).value + 1e-12


@settings(max_examples=80, deadline=None)
@given(graphs(), st.data())
def test_monotone_in_edge_capacity(case, data):
    net, a, b = case
    assume(net.edges)
    i = data.draw(st.integers(0, len(net.edges) - 1))
    bump = data.draw(st.floats(0.0, 3.0))
    caps = [e.capacity + (bump if j == i else 0.0) for j, e in enumerate(net.edges)]
    up = net.with_capacities(caps)
    assert flooding_capacity(up, a, b).value >= flooding_capacity(net, a, b).value - 1e-12
    assert single_path_capacity(up, a, b).value >= single_path_capacity(net, a, b).value


@settings(max_examples=80, deadline=None)
@given(graphs(), st.sampled_from([0.5, 2.0, 4.0, 0.125]))
def test_scale_covariance(case, c):
    # powers of two keep the scaling exact in floating point
    net, a, b = case
    scaled = net.scaled(c)
    assert flooding_capacity(scaled, a, b).value == pytest.approx(c * flooding_capacity(net, a, b).value, rel=1e-12, abs=1e-12)
    assert single_path_capacity(scaled, a, b).value == c * single_path_capacity(net, a, b).value


def test_set_cut():
    net = Network(range(4), [(0, 2, 1.0), (1, 2, 1.0), (2, 3, 5.0)])
    cut = min_cut_between_sets(net, [0, 1], [3])
    assert cut.multi_edge_capacity == 2.0
    assert len(min_cut_between_sets(net, [0, 1], [3], unit=True).cut_set) == 1
    with pytest.raises(DomainError):
        min_cut_between_sets(net, [0], [0])


# -- serialisation

def test_json_round_trip(tmp_path):
    net = Network(["x", "y", "z"], [("x", "y", 0.5), ("y", "z", 1.5)])
    path = tmp_path / "n.json"
    net.dump(path)
    back = Network.load(path)
    assert back.nodes == net.nodes
    assert [(e.u, e.v, e.capacity) for e in back.edges] == [(e.u, e.v, e.capacity) for e in net.edges]


@pytest.mark.parametrize("payload", [
    {"nodes": [], "edges": [], "extra": 1},
    {"nodes": [{"id": "a", "colour": "red"}]},
    {"edges": [{"u": "a", "v": "b", "capacity": 1, "weight": 2}]},
    {"edges": [{"u": "a", "v": "b"}]},
    {"edges": [{"u": "a", "v": "b", "capacity": 1, "channel": {}}]},
    {"edges": [{"u": "a", "v": "b", "capacity": "1"}]},
    {"edges": [{"u": "a", "v": "a", "capacity": 1}]},
    [],
])
def test_json_strictness(payload):
    with pytest.raises(ConfigError):
        Network.from_dict(payload)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        Network.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        Network.load(bad)


# -- channel-backed edges

def test_uniform_fiber_capacities():
    spec = {"medium": "fiber", "length": "20km"}
    net = Network.from_dict({"edges": [{"u": i, "v": i + 1, "channel": spec} for i in range(4)]})
    caps = {e.capacity for e in capacities_from_channels(net).edges}
    assert len(caps) == 1


def test_mixed_channels_match_direct_calls():
    fiber = {"medium": "fiber", "length": "30km"}
    down = {"preset": "table1-setup1", "kind": "downlink", "h_sat": "500km", "strict": False}
    net = Network.from_dict({"edges": [
        {"u": "a", "v": "s", "channel": down},
        {"u": "s", "v": "b", "channel": fiber},
        {"u": "a", "v": "b", "capacity": 0.01},
    ]})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = capacities_from_channels(net)
        want_down = channel_from_spec(down).capacity()
    want_fiber = channel_from_spec(fiber).capacity()
    assert out.edges[0].capacity == want_down.value
    assert out.edges[1].capacity == want_fiber.value
    assert out.edges[2].capacity == 0.01
    # the downlink sees background light, so its bound is tight rather than achievable
    assert want_down.kind is BoundKind.TIGHT
    assert out.edges[0].kind is BoundKind.TIGHT and out.edges[1].kind is BoundKind.EXACT
    assert flooding_capacity(out, "a", "b").kind is BoundKind.TIGHT
    assert single_path_capacity(out, "a", "b").kind is BoundKind.TIGHT


def test_channel_errors_carry_edge_context():
    net = Network.from_dict({"edges": [
        {"u": "a", "v": "b", "capacity": 1.0},
        {"u": "b", "v": "c", "channel": {"preset": "nope", "kind": "ground", "z": 10}},
    ]})
    with pytest.raises(ChannelError) as info:
        capacities_from_channels(net)
    assert info.value.edge == 1


def test_bundled_example_is_valid_json():
    from importlib import resources

    data = json.loads(resources.files("qnetcap").joinpath("data/example_network.json").read_text())
    net = capacities_from_channels(Network.from_dict(data))
    assert flooding_capacity(net, "alice", "bob").value == pytest.approx(
        brute_force_min_cut(net, "alice", "bob").multi_edge_capacity, abs=1e-12)

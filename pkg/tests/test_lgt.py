import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setchase.adversaries import LB_PRESETS, det_lower_bound
from setchase.engine import replay
from setchase.lgt import (LayeredInstance, NotATree, NotBinarized, WidthMismatch, binarize,
                          brute_force_opt, cow_path, distances, offline_opt, ops_to_instance,
                          random_instance, reduce_and_run, single_path)
from setchase.policies import make_policy

from strategies import op_streams


def test_offline_opt_examples():
    assert offline_opt(single_path([1, 2, 3])) == 6
    two = LayeredInstance([["s"], ["a", "b"]], [("s", "a", 4), ("s", "b", 7)])
    assert offline_opt(two) == 4


def test_instance_validation():
    with pytest.raises(NotATree):
        LayeredInstance([["s", "t"]], [])
    with pytest.raises(NotATree):
        LayeredInstance([["s"], ["a"], ["b"]], [("s", "a", 1), ("s", "b", 1)])
    with pytest.raises(NotATree):
        LayeredInstance([["s"], ["a", "b"], ["c"]],
                        [("s", "a", 1), ("s", "b", 1), ("a", "c", 1), ("b", "c", 1)])
    with pytest.raises(NotATree):
        LayeredInstance([["s"], ["a"]], [("s", "a", -1)])
    with pytest.raises(WidthMismatch):
        LayeredInstance([["s"], ["a"]], [("s", "a", 1)], width=3)


def test_json_round_trip():
    inst = random_instance(5, 3, seed=2)
    back = LayeredInstance.from_json(inst.to_json())
    assert back.to_dict() == inst.to_dict()


def test_fan_out_three_needs_two_layers():
    inst = LayeredInstance([["s"], ["a", "b", "c"]], [("s", "a", 0), ("s", "b", 0), ("s", "c", 0)])
    b = binarize(inst)
    assert len(b.layers) == 3
    assert b.is_binarized()
    assert sorted(b.layers[-1]) == ["a", "b", "c"]


def test_two_positive_edges_are_serialised():
    inst = LayeredInstance([["s"], ["a", "b"]], [("s", "a", 1.5), ("s", "b", 2.5)])
    b = binarize(inst)
    assert b.is_binarized() and len(b.layers) == 3
    d0, d1 = distances(inst), distances(b)
    assert d1["a"] == 1.5 and d1["b"] == 2.5


def test_reduction_needs_binary_input():
    inst = LayeredInstance([["s"], ["a", "b", "c"]], [("s", "a", 0), ("s", "b", 0), ("s", "c", 0)])
    with pytest.raises(NotBinarized):
        reduce_and_run(inst, make_policy("greedy"))


@pytest.mark.parametrize("pid", ["chaser-2k", "greedy", "lazy"])
def test_single_path_costs_its_length(pid):
    r = reduce_and_run(single_path([1, 2, 3, 4, 5]), make_policy(pid))
    assert r.cost == 15 and r.transcript.final_opt == 15


def test_cow_path_within_nine():
    inst = binarize(cow_path(14))
    r = reduce_and_run(inst, make_policy("chaser-2k"))
    assert r.cost <= 9 * r.transcript.final_opt


def test_exported_lower_bound_replays_identically():
    tr, _, _ = det_lower_bound(LB_PRESETS[2], make_policy("chaser-2k"))
    inst = ops_to_instance(tr.ops)
    assert inst.is_binarized()
    r = reduce_and_run(inst, make_policy("chaser-2k"))
    assert r.transcript.to_jsonl() == tr.to_jsonl()


@given(op_streams(max_width=4, max_ops=25))
def test_export_round_trip_on_arbitrary_streams(ops):
    direct, _ = replay(ops, make_policy("greedy"))
    r = reduce_and_run(ops_to_instance(ops), make_policy("greedy"))
    assert r.transcript.to_jsonl() == direct.to_jsonl()


@settings(max_examples=80)
@given(st.integers(2, 7), st.integers(1, 4), st.integers(0, 2**31))
def test_reduction_properties(n_layers, width, seed):
    inst = random_instance(n_layers, width, seed)
    b = binarize(inst)
    assert b.is_binarized()
    assert binarize(b).to_dict() == b.to_dict()
    d0, d1 = distances(inst), distances(b)
    assert all(d0[v] == d1[v] for layer in inst.layers for v in layer)
    assert offline_opt(inst) == brute_force_opt(inst)
    r = reduce_and_run(b, make_policy("chaser-2k"))
    assert r.transcript.width_seen <= inst.width
    assert r.transcript.final_opt == pytest.approx(offline_opt(inst), abs=1e-9)
    assert r.route_cost <= r.cost + 1e-9
    assert len(r.checks) == len(b.layers)
    assert r.route[0] == "s" and r.route[-1] in inst.layers[-1]

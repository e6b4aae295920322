import json
import math

import pytest
from hypothesis import given

from setchase.engine import (CSV_FIELDS, END, Delete, Fork, GameOp, Grow, IllegalOp, Policy,
                             PolicyReturnedNonLeaf, PolicyStayedOnDeletedLeaf, ScriptedAdversary,
                             Transcript, ratio, replay, run_game, summary_csv)
from setchase.policies import Greedy, Lazy

from strategies import op_streams


class Stubborn(Policy):
    def on_delete(self, tree, leaf):
        return leaf


class Wanderer(Policy):
    def on_grow(self, tree, leaf, h):
        return tree.top if not tree.is_leaf(tree.top) else 0


def test_ratio_conventions():
    assert ratio(0.0, 0.0) == 1.0
    assert ratio(1.0, 0.0) == math.inf
    assert ratio(3.0, 2.0) == 1.5


def test_growing_the_occupied_leaf_costs_h():
    tr, res = replay([Grow(1, 2.0), Grow(1, 3.0)], Lazy())
    assert [s.cost for s in tr.steps] == [2.0, 3.0]
    assert res.ratio == 1.0


def test_fork_then_switch_cost():
    ops = [Fork(1), Grow(2, 3.0), Grow(3, 1.0)]
    tr, res = replay(ops, Greedy())
    # greedy leaves leaf 2 from below the new growth, so the switch is free; then it pays 1
    assert [s.cost for s in tr.steps] == [0.0, 0.0, 1.0]
    assert tr.steps[-1].alg_to == 3
    assert res.opt == 1.0


def test_forced_move_on_delete():
    ops = [Fork(1), Grow(2, 1.0), Grow(3, 2.0), Delete(2)]
    tr, _ = replay(ops, Lazy())
    assert tr.steps[-1].cost == 3.0
    assert tr.steps[-1].alg_to == 3


def test_policy_errors():
    with pytest.raises(PolicyStayedOnDeletedLeaf):
        replay([Fork(1), Grow(3, 1.0), Delete(2)], Stubborn())
    with pytest.raises(PolicyReturnedNonLeaf):
        replay([Fork(1), Grow(2, 1.0)], Wanderer())


def test_illegal_ops():
    with pytest.raises(IllegalOp):
        replay([Delete(1)], Lazy())
    with pytest.raises(IllegalOp):
        replay([Grow(7, 1.0)], Lazy())
    with pytest.raises(IllegalOp):
        replay([Grow(1, -1.0)], Lazy())
    with pytest.raises(IllegalOp):
        replay([GameOp("teleport", 1)], Lazy())


def test_op_limit_truncates():
    tr, _ = run_game(ScriptedAdversary([Grow(1, 1.0)] * 5), Lazy(), max_ops=3)
    assert tr.truncated and len(tr.steps) == 3


def test_csv_uses_repr_for_floats():
    text = summary_csv([{"instance": "x", "algorithm": "g", "k": 2, "cost": 0.1, "opt": 1.0, "ratio": 0.1}])
    assert text.splitlines()[0] == ",".join(CSV_FIELDS)
    assert "0.1,1.0,0.1" in text


def test_end_constant():
    assert END.kind == "end"


@given(op_streams())
def test_transcript_round_trip_and_replay(ops):
    tr, res = replay(ops, Greedy())
    back = Transcript.from_jsonl(tr.to_jsonl())
    assert back.to_jsonl() == tr.to_jsonl()
    tr2, res2 = replay(back.ops, Greedy())
    assert tr2.to_jsonl() == tr.to_jsonl()
    last = json.loads(tr.to_jsonl().splitlines()[-1])
    assert last["summary"] and last["steps"] == len(ops)


@given(op_streams())
def test_costs_are_nonnegative_and_add_up(ops):
    tr, res = replay(ops, Lazy())
    assert all(s.cost >= 0 for s in tr.steps)
    assert res.cost == pytest.approx(sum(s.cost for s in tr.steps))

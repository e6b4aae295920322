import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from setchase.tree import (AlgOnDeletedLeaf, InvalidWeight, LeafIsRootChild, NonpositiveAmount,
                           NotALeaf, TreeError, WeightedStemmedTree, leaf_paths, leq)

from strategies import build, op_streams


@pytest.fixture
def cherry():
    # root -0- 1 -> (2: 3.0, 3: 1.0)
    t = WeightedStemmedTree()
    a, b = t.fork(1)
    t.grow(a, 3.0)
    t.grow(b, 1.0)
    return t


def test_fresh_tree_is_a_single_zero_stem():
    t = WeightedStemmedTree()
    assert t.leaves() == [1]
    assert t.weight(1) == 0.0
    assert t.opt() == 0.0
    assert t.alg_leaf == 1
    assert t.max_depth_seen == 1


def test_fork_ids_are_sequential(cherry):
    assert cherry.children(1) == [2, 3]
    assert cherry.fork(3) == (4, 5)
    assert cherry.max_depth_seen == 3


def test_opt_prefers_shorter_side(cherry):
    opt, best = cherry.opt_table()
    assert opt[1] == 1.0
    assert best[1] == 3


def test_opt_ties_go_to_smaller_leaf():
    t = WeightedStemmedTree()
    a, b = t.fork(1)
    t.grow(b, 1.0)
    t.grow(a, 1.0)
    assert t.opt_leaf() == a


def test_delete_smooths_into_sibling(cherry):
    cherry.grow(1, 0.5) if False else None
    c, d = cherry.fork(2)
    cherry.grow(c, 2.0)
    rec = cherry.delete_leaf(d)
    assert rec.survivor == c and rec.removed_parent == 2
    assert cherry.weight(c) == 5.0
    assert cherry.parent(c) == 1
    assert 2 not in cherry


def test_delete_guards(cherry):
    with pytest.raises(AlgOnDeletedLeaf):
        cherry.alg_leaf = 2
        cherry.delete_leaf(2)
    t = WeightedStemmedTree()
    with pytest.raises(LeafIsRootChild):
        t.delete_leaf(1)
    with pytest.raises(NotALeaf):
        cherry.delete_leaf(1)


def test_grow_guards(cherry):
    with pytest.raises(NonpositiveAmount):
        cherry.grow(2, 0.0)
    with pytest.raises(NotALeaf):
        cherry.grow(1, 1.0)
    with pytest.raises(TreeError):
        cherry.grow(2, math.inf)
    with pytest.raises(InvalidWeight):
        cherry.set_weight(2, -1.0)


def test_level_counts_from_max_depth(cherry):
    cherry.fork(3)
    assert cherry.level(1) == 3
    assert cherry.level(3) == 2
    assert cherry.level(4) == 1


def test_dist_goes_through_lca(cherry):
    assert cherry.dist(2, 3) == 4.0
    assert cherry.dist(2, 2) == 0.0
    assert cherry.root_dist(2) == 3.0


def test_leq_is_relative():
    assert leq(1.0 + 1e-12, 1.0)
    assert not leq(1.001, 1.0)
    assert leq(1e9 + 0.1, 1e9)


@given(op_streams())
def test_random_streams_keep_the_tree_valid(ops):
    t = build(ops)
    t.validate()
    assert len(t.leaves()) == t.width
    for u in t.nodes:
        if u != t.root:
            assert t.weight(u) >= 0


@given(op_streams())
def test_opt_matches_leaf_enumeration(ops):
    t = build(ops)
    paths = leaf_paths(t)
    assert t.opt() == pytest.approx(min(paths.values()), rel=1e-12, abs=1e-12)
    assert paths[t.opt_leaf()] == pytest.approx(t.opt(), rel=1e-12, abs=1e-12)


@given(op_streams())
def test_dist_is_a_metric_on_leaves(ops):
    t = build(ops)
    leaves = t.leaves()
    for u, v in itertools.product(leaves, repeat=2):
        assert t.dist(u, v) == pytest.approx(t.dist(v, u), abs=1e-9)
    for u, v, w in itertools.islice(itertools.product(leaves, repeat=3), 60):
        assert t.dist(u, w) <= t.dist(u, v) + t.dist(v, w) + 1e-9


@given(op_streams())
def test_json_round_trip(ops):
    t = build(ops)
    back = WeightedStemmedTree.from_json(t.to_json())
    assert back.to_dict() == t.to_dict()
    assert back.fork(back.leaves()[0]) == t.copy().fork(t.leaves()[0])


@given(op_streams(), st.data())
def test_deletion_preserves_surviving_distances(ops, data):
    t = build(ops)
    if t.width < 3:
        return
    leaves = t.leaves()
    gone = data.draw(st.sampled_from(leaves))
    t.alg_leaf = next(u for u in leaves if u != gone)
    rest = [u for u in leaves if u != gone]
    before = {(u, v): t.dist(u, v) for u in rest for v in rest}
    t.delete_leaf(gone)
    for (u, v), d in before.items():
        assert t.dist(u, v) == pytest.approx(d, rel=1e-12, abs=1e-12)


@given(op_streams())
def test_copy_is_independent(ops):
    t = build(ops)
    c = t.copy()
    c.grow(c.leaves()[0], 1.0)
    assert c.to_dict() != t.to_dict()

import pytest
from hypothesis import given

from setchase.constants import dk, switch_coeff, xk
from setchase.potential import (LevelUnderflow, TrivialSubtree, balance_violations, check_claim2,
                                opt_other, phi_naive, phi_refined)
from setchase.tree import WeightedStemmedTree

from strategies import build, op_streams


def cherry(a, b, alg_first=True):
    t = WeightedStemmedTree()
    l, r = t.fork(1)
    t.grow(l, a)
    t.grow(r, b)
    t.alg_leaf = l if alg_first else r
    return t


def test_single_stem():
    t = WeightedStemmedTree()
    t.grow(1, 2.0)
    assert phi_naive(t) == 2.0
    assert phi_refined(t).total == 2.0


def test_cherry_by_hand():
    t = cherry(1.0, 1.5)
    expect = switch_coeff(2) * 1.5 + 1.0 + 1.5
    assert phi_naive(t) == pytest.approx(expect)
    assert phi_refined(t).total == pytest.approx(expect)


def test_refined_caps_the_other_side():
    t = cherry(1.0, 5.0)
    rep = phi_refined(t)
    top = rep[1]
    assert top.opt_other == 5.0
    assert top.opt_other_capped == pytest.approx(xk(2) * 1.0)
    assert rep[3].phi_capped == pytest.approx(dk(1) * xk(2) * 1.0)


def test_extreme_flag_when_bound_is_tight():
    t = cherry(1.0, 2.0)
    assert phi_refined(t)[1].is_extreme


def test_other_side_is_the_larger_when_alg_outside():
    t = cherry(1.0, 3.0)
    c, d = t.fork(3)
    t.alg_leaf = 2
    assert opt_other(t, 3) == 0.0
    t.grow(c, 1.0)
    t.grow(d, 2.0)
    assert opt_other(t, 3) == 2.0
    with pytest.raises(TrivialSubtree):
        opt_other(t, 2)


def test_level_one_internal_node_is_rejected():
    t = cherry(1.0, 1.0)
    with pytest.raises(LevelUnderflow):
        phi_naive(t, k=1)


def test_balance_violation_two_sided():
    t = cherry(1.0, 2.5)
    assert balance_violations(t) == [1]
    t2 = cherry(1.0, 2.0)
    assert balance_violations(t2) == []


@given(op_streams(max_width=4))
def test_refined_never_exceeds_naive(ops):
    t = build(ops)
    assert phi_refined(t).total <= phi_naive(t) * (1 + 1e-12) + 1e-12


@given(op_streams(max_width=4))
def test_potential_bound_on_balanced_states(ops):
    t = build(ops)
    if balance_violations(t):
        return
    assert all(check_claim2(t).values())

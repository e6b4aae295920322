"""Hypothesis strategies for legal game op streams."""

from hypothesis import strategies as st

from setchase.engine import Delete, Fork, Grow
from setchase.tree import WeightedStemmedTree

amounts = st.one_of(
    st.sampled_from([0.25, 0.5, 1.0, 2.0, 3.0]),
    st.floats(min_value=1e-3, max_value=50.0, allow_nan=False, allow_infinity=False),
)


@st.composite
def op_streams(draw, max_width=5, max_ops=40):
    """A legal op list, generated against a shadow tree so ids stay valid."""
    t = WeightedStemmedTree()
    ops = []
    for _ in range(draw(st.integers(0, max_ops))):
        leaves = t.leaves()
        kinds = ["grow"]
        if len(leaves) < max_width:
            kinds.append("fork")
        if len(leaves) > 1:
            kinds.append("delete")
        kind = draw(st.sampled_from(kinds))
        leaf = draw(st.sampled_from(leaves))
        if kind == "grow":
            op = Grow(leaf, draw(amounts))
            t.grow(leaf, op.h)
        elif kind == "fork":
            op = Fork(leaf)
            a, _ = t.fork(leaf)
            if t.alg_leaf == leaf:
                t.alg_leaf = a
        else:
            op = Delete(leaf)
            if t.alg_leaf == leaf:
                t.alg_leaf = next(u for u in leaves if u != leaf)
            t.delete_leaf(leaf)
        ops.append(op)
    return ops


def build(ops):
    """Apply ``ops`` straight to a fresh tree (no policy)."""
    t = WeightedStemmedTree()
    for op in ops:
        if op.kind == "grow":
            t.grow(op.leaf, op.h)
        elif op.kind == "fork":
            a, _ = t.fork(op.leaf)
            if t.alg_leaf == op.leaf:
                t.alg_leaf = a
        else:
            if t.alg_leaf == op.leaf:
                t.alg_leaf = next(u for u in t.leaves() if u != op.leaf)
            t.delete_leaf(op.leaf)
    return t

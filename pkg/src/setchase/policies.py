"""Baseline policies and the policy registry."""

from __future__ import annotations

from .chaser import DistortedChaser
from .d3 import D3Chaser
from .engine import Policy
from .tree import SmoothingRecord, WeightedStemmedTree


def _best_other(tree: WeightedStemmedTree, leaf: int) -> int:
    """Leaf closest to the root other than ``leaf``; ties to the smallest id."""
    cands = [u for u in tree.leaves() if u != leaf]
    return min(cands, key=lambda u: (tree.root_dist(u), u))


class Greedy(Policy):
    """Always sit on a currently optimal leaf."""

    policy_id = "greedy"

    def on_grow(self, tree, leaf, h):
        return tree.opt_leaf()

    def on_delete(self, tree, leaf):
        return _best_other(tree, leaf)

    def after_delete(self, tree, rec: SmoothingRecord):
        return tree.opt_leaf()

    def on_fork(self, tree, leaf, children):
        return tree.opt_leaf()


class Lazy(Policy):
    """Never switch voluntarily; forced moves go to the nearest leaf."""

    policy_id = "lazy"

    def on_delete(self, tree, leaf):
        others = [u for u in tree.leaves() if u != leaf]
        return min(others, key=lambda u: (tree.dist(leaf, u), u))


POLICIES = {
    "chaser-2k": DistortedChaser,
    "chaser-d3": D3Chaser,
    "greedy": Greedy,
    "lazy": Lazy,
}


def make_policy(policy_id: str, audit: bool = False) -> Policy:
    try:
        cls = POLICIES[policy_id]
    except KeyError:
        raise KeyError(f"unknown policy {policy_id!r}; choose from {sorted(POLICIES)}") from None
    if cls in (DistortedChaser, D3Chaser):
        return cls(audit=audit)
    return cls()

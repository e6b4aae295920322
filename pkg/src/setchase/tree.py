"""Edge-weighted stemmed binary trees for the evolving tree game.

The tree is an arena of nodes keyed by integer ids.  Ids are handed out by a
monotone counter and never reused, so a ``NodeId`` stays meaningful for the
whole history of a game.  A subtree is named by its *top* node: the child end
of its stem edge ``e(S)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

TAU = 1e-9
ABS_TOL = 1e-12


class TreeError(ValueError):
    """Base class for illegal tree mutations."""


class NotALeaf(TreeError):
    pass


class NonpositiveAmount(TreeError):
    pass


class LeafIsRootChild(TreeError):
    pass


class AlgOnDeletedLeaf(TreeError):
    pass


class InvalidWeight(TreeError):
    pass


@dataclass
class Node:
    parent: int | None
    children: list[int] = field(default_factory=list)
    weight: float = 0.0


@dataclass(frozen=True)
class SmoothingRecord:
    deleted: int
    removed_parent: int
    survivor: int
    merged_weight: float
    survivor_old_weight: float


def _check_finite(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise InvalidWeight(f"weight must be finite, got {x!r}")
    return x


class WeightedStemmedTree:
    """Mutable stemmed binary tree with a distinguished algorithm leaf."""

    def __init__(self) -> None:
        self.nodes: dict[int, Node] = {0: Node(None, [1]), 1: Node(0, [], 0.0)}
        self.root = 0
        self.alg_leaf = 1
        self.max_depth_seen = 1
        self._next_id = 2

    # -- structure -----------------------------------------------------
    def copy(self) -> WeightedStemmedTree:
        t = WeightedStemmedTree.__new__(WeightedStemmedTree)
        t.nodes = {i: Node(n.parent, list(n.children), n.weight) for i, n in self.nodes.items()}
        t.root = self.root
        t.alg_leaf = self.alg_leaf
        t.max_depth_seen = self.max_depth_seen
        t._next_id = self._next_id
        return t

    @property
    def top(self) -> int:
        """Top node of the whole tree (the root's unique child)."""
        return self.nodes[self.root].children[0]

    def __contains__(self, u: int) -> bool:
        return u in self.nodes

    def weight(self, u: int) -> float:
        return self.nodes[u].weight

    def parent(self, u: int) -> int | None:
        return self.nodes[u].parent

    def children(self, u: int) -> list[int]:
        return self.nodes[u].children

    def is_leaf(self, u: int) -> bool:
        return u in self.nodes and u != self.root and not self.nodes[u].children

    def leaves(self, top: int | None = None) -> list[int]:
        """Leaves below ``top`` (default: whole tree), left to right."""
        out = []
        stack = [self.top if top is None else top]
        while stack:
            u = stack.pop()
            ch = self.nodes[u].children
            if ch:
                stack.extend(reversed(ch))
            else:
                out.append(u)
        return out

    @property
    def width(self) -> int:
        return len(self.leaves())

    def depth(self, u: int) -> int:
        d = 0
        nodes = self.nodes
        while nodes[u].parent is not None:
            u = nodes[u].parent
            d += 1
        return d

    @property
    def tree_depth(self) -> int:
        best = 0
        stack = [(self.root, 0)]
        while stack:
            u, d = stack.pop()
            best = max(best, d)
            stack.extend((c, d + 1) for c in self.nodes[u].children)
        return best

    def ancestors(self, u: int) -> list[int]:
        """``u`` and its ancestors up to (excluding) the root, bottom-up."""
        out = []
        nodes = self.nodes
        while u != self.root:
            out.append(u)
            u = nodes[u].parent
        return out

    def contains(self, top: int, u: int) -> bool:
        """Whether node ``u`` lies in the subtree whose top is ``top``."""
        nodes = self.nodes
        while u is not None:
            if u == top:
                return True
            u = nodes[u].parent
        return False

    def level(self, top: int, k: int | None = None) -> int:
        """Level of the subtree with top ``top``: k minus the depth of its root."""
        k = self.max_depth_seen if k is None else k
        return k - self.depth(top) + 1

    def raise_k(self, k: int) -> None:
        """Bump the running maximum depth (used to stage scripted states)."""
        self.max_depth_seen = max(self.max_depth_seen, int(k))

    # -- mutations -----------------------------------------------------
    def _require_leaf(self, leaf: int) -> None:
        if not self.is_leaf(leaf):
            raise NotALeaf(f"node {leaf} is not a leaf")

    def grow(self, leaf: int, h: float) -> None:
        self._require_leaf(leaf)
        h = _check_finite(h)
        if not h > 0:
            raise NonpositiveAmount(f"growth amount must be positive, got {h}")
        self.nodes[leaf].weight += h

    def delete_leaf(self, leaf: int) -> SmoothingRecord:
        self._require_leaf(leaf)
        p = self.nodes[leaf].parent
        if p == self.root:
            raise LeafIsRootChild(f"leaf {leaf} is the unique child of the root")
        if leaf == self.alg_leaf:
            raise AlgOnDeletedLeaf(f"algorithm sits on leaf {leaf}")
        pn = self.nodes[p]
        sib = pn.children[1] if pn.children[0] == leaf else pn.children[0]
        g = pn.parent
        sn = self.nodes[sib]
        old = sn.weight
        sn.weight = pn.weight + sn.weight
        sn.parent = g
        gch = self.nodes[g].children
        gch[gch.index(p)] = sib
        del self.nodes[leaf]
        del self.nodes[p]
        return SmoothingRecord(leaf, p, sib, sn.weight, old)

    def fork(self, leaf: int, ids: tuple[int, int] | None = None) -> tuple[int, int]:
        """Attach two zero-weight children to ``leaf``; returns (first, second)."""
        self._require_leaf(leaf)
        if ids is None:
            a, b = self._next_id, self._next_id + 1
        else:
            a, b = ids
            if a in self.nodes or b in self.nodes or a == b:
                raise TreeError(f"ids {ids} already in use")
        self._next_id = max(self._next_id, a + 1, b + 1)
        self.nodes[a] = Node(leaf, [], 0.0)
        self.nodes[b] = Node(leaf, [], 0.0)
        self.nodes[leaf].children = [a, b]
        self.max_depth_seen = max(self.max_depth_seen, self.depth(a))
        return a, b

    def set_weight(self, u: int, w: float) -> None:
        w = _check_finite(w)
        if w < 0:
            raise InvalidWeight(f"negative weight {w}")
        self.nodes[u].weight = w

    # -- metric queries ------------------------------------------------
    def opt_table(self, top: int | None = None) -> tuple[dict[int, float], dict[int, int]]:
        """OPT and optimal leaf for every subtree below ``top``.

        Ties go to the smallest leaf id.
        """
        top = self.top if top is None else top
        nodes = self.nodes
        opt: dict[int, float] = {}
        best: dict[int, int] = {}
        order = []
        stack = [top]
        while stack:
            u = stack.pop()
            order.append(u)
            stack.extend(nodes[u].children)
        for u in reversed(order):
            n = nodes[u]
            if not n.children:
                opt[u] = n.weight
                best[u] = u
            else:
                a, b = n.children
                oa, ob = opt[a], opt[b]
                if oa < ob or (oa == ob and best[a] < best[b]):
                    opt[u] = n.weight + oa
                    best[u] = best[a]
                else:
                    opt[u] = n.weight + ob
                    best[u] = best[b]
        return opt, best

    def opt(self, top: int | None = None) -> float:
        """Shortest distance from the upper end of ``e(top)`` to a leaf below."""
        top = self.top if top is None else top
        return self.opt_table(top)[0][top]

    def opt_leaf(self, top: int | None = None) -> int:
        top = self.top if top is None else top
        return self.opt_table(top)[1][top]

    def dist(self, u: int, v: int) -> float:
        """Length of the tree path between nodes ``u`` and ``v``."""
        if u == v:
            return 0.0
        nodes = self.nodes
        up: dict[int, float] = {}
        acc = 0.0
        x = u
        while x is not None:
            up[x] = acc
            n = nodes[x]
            if n.parent is None:
                break
            acc += n.weight
            x = n.parent
        acc = 0.0
        x = v
        while x not in up:
            acc += nodes[x].weight
            x = nodes[x].parent
        return up[x] + acc

    def root_dist(self, u: int) -> float:
        s = 0.0
        nodes = self.nodes
        while nodes[u].parent is not None:
            s += nodes[u].weight
            u = nodes[u].parent
        return s

    def subtree_nodes(self, top: int) -> list[int]:
        out = []
        stack = [top]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(self.nodes[u].children)
        return out

    # -- validation ----------------------------------------------------
    def validate(self) -> None:
        """Raise ``TreeError`` if any stemmed-binary invariant is broken."""
        nodes = self.nodes
        r = nodes.get(self.root)
        if r is None or r.parent is not None or len(r.children) != 1:
            raise TreeError("root must exist and have exactly one child")
        seen = set()
        stack = [self.root]
        while stack:
            u = stack.pop()
            if u in seen:
                raise TreeError(f"cycle at {u}")
            seen.add(u)
            n = nodes[u]
            if u != self.root and len(n.children) not in (0, 2):
                raise TreeError(f"node {u} has {len(n.children)} children")
            if not (n.weight >= 0 and math.isfinite(n.weight)):
                raise TreeError(f"bad weight on {u}: {n.weight}")
            for c in n.children:
                if nodes[c].parent != u:
                    raise TreeError(f"parent link of {c} broken")
                stack.append(c)
        if seen != set(nodes):
            raise TreeError("unreachable nodes present")
        if not self.is_leaf(self.alg_leaf):
            raise TreeError(f"alg_leaf {self.alg_leaf} is not a leaf")
        if self.tree_depth > self.max_depth_seen:
            raise TreeError("max_depth_seen below current depth")

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        rows = []
        stack = [self.root]
        while stack:
            u = stack.pop()
            n = self.nodes[u]
            rows.append({"id": u, "parent": n.parent, "weight": n.weight,
                         "is_alg_leaf": u == self.alg_leaf})
            stack.extend(reversed(n.children))
        return {"k": self.max_depth_seen, "next_id": self._next_id, "nodes": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> WeightedStemmedTree:
        t = cls.__new__(cls)
        t.nodes = {}
        t.alg_leaf = None
        for row in d["nodes"]:
            u = int(row["id"])
            p = row["parent"]
            t.nodes[u] = Node(None if p is None else int(p), [], float(row["weight"]))
            if p is None:
                t.root = u
            else:
                t.nodes[int(p)].children.append(u)
            if row.get("is_alg_leaf"):
                t.alg_leaf = u
        t.max_depth_seen = int(d["k"])
        t._next_id = int(d.get("next_id", max(t.nodes) + 1))
        t.validate()
        return t

    @classmethod
    def from_json(cls, s: str) -> WeightedStemmedTree:
        return cls.from_dict(json.loads(s))

    def __repr__(self) -> str:
        return f"WeightedStemmedTree(width={self.width}, k={self.max_depth_seen}, alg={self.alg_leaf})"


def leaf_paths(tree: WeightedStemmedTree, top: int | None = None) -> dict[int, float]:
    """Distance from the upper end of ``e(top)`` to each leaf, by enumeration."""
    top = tree.top if top is None else top
    out = {}
    stack = [(top, tree.weight(top))]
    while stack:
        u, d = stack.pop()
        ch = tree.children(u)
        if not ch:
            out[u] = d
        for c in ch:
            stack.append((c, d + tree.weight(c)))
    return out


def close(a: float, b: float, tau: float = TAU) -> bool:
    return abs(a - b) <= tau * max(abs(a), abs(b)) + ABS_TOL


def leq(a: float, b: float, scale: float = 1.0, tau: float = TAU) -> bool:
    """``a <= b`` up to relative tolerance ``tau`` of ``scale``."""
    return a <= b + tau * max(abs(scale), abs(a), abs(b), 1.0) + ABS_TOL

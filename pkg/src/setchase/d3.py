"""Exact policy for trees with at most three leaves.

No distortion: the policy reads the game tree directly.  Its potential
refines the single-leaf side of a three-leaf tree, which lets deletions that
leave the algorithm in place keep the potential from dropping.
"""

from __future__ import annotations

from dataclasses import dataclass

from .chaser import violated_subtree
from .constants import dk, switch_coeff, xk
from .engine import Policy
from .potential import phi_refined
from .tree import TAU, SmoothingRecord, WeightedStemmedTree, leq

MAX_WIDTH = 3


class WidthExceeded(ValueError):
    pass


@dataclass(frozen=True)
class ThreeLeafLayout:
    e: float
    a: float
    b: float
    c: float
    d: float
    single: int  # leaf of the one-leaf side
    pair: int    # internal node carrying the two-leaf side
    left: int    # first child of ``pair``
    right: int   # second child of ``pair``


def layout(tree: WeightedStemmedTree) -> ThreeLeafLayout:
    """Name the edges of a three-leaf tree, single-leaf side first."""
    top = tree.top
    ch = tree.children(top)
    if len(tree.leaves()) != 3 or not ch:
        raise WidthExceeded("layout needs exactly three leaves")
    s, p = ch if tree.is_leaf(ch[0]) else (ch[1], ch[0])
    lc, rc = tree.children(p)
    return ThreeLeafLayout(tree.weight(top), tree.weight(s), tree.weight(p),
                           tree.weight(lc), tree.weight(rc), s, p, lc, rc)


def single_side_term(a: float, b: float, cd: float, x3: float) -> float:
    """Capped potential of the one-leaf side given the pair side's stem ``b`` and min leaf ``cd``."""
    return dk(2) * min(a, b * x3) + dk(1) * max(min(a - b * x3, cd * x3), 0.0)


def phi_d3(tree: WeightedStemmedTree, alg: int | None = None, k: int | None = None) -> float:
    """Potential for width-3 play; equals ``phi_refined`` below three leaves."""
    n = tree.width
    if n > MAX_WIDTH:
        raise WidthExceeded(f"width {n} > {MAX_WIDTH}")
    if n < 3:
        return phi_refined(tree, alg=alg, k=k).total
    alg = tree.alg_leaf if alg is None else alg
    k = tree.max_depth_seen if k is None else k
    L = layout(tree)
    level = tree.level(tree.top, k)
    x = xk(level)
    opt_l = L.a
    opt_r = L.b + min(L.c, L.d)
    m = min(opt_l, opt_r)
    if alg == L.single:
        other = opt_r
    elif tree.contains(L.pair, alg):
        other = opt_l
    else:
        other = max(opt_l, opt_r)
    phi_pair = phi_refined(tree, top=L.pair, alg=alg, k=k).total
    return (dk(level) * L.e + switch_coeff(level) * min(other, x * m)
            + single_side_term(L.a, L.b, min(L.c, L.d), x)
            + min(phi_pair, dk(level - 1) * x * m))


@dataclass
class D3Step:
    kind: str
    cost: float
    delta_phi: float


class D3Chaser(Policy):
    """Stay while the ratio invariant holds; otherwise switch to the optimal leaf."""

    policy_id = "chaser-d3"

    def __init__(self, audit: bool = True, tau: float = TAU):
        self.audit_enabled = audit
        self.tau = tau

    def reset(self, tree: WeightedStemmedTree) -> None:
        if tree.width > MAX_WIDTH:
            raise WidthExceeded(f"width {tree.width} > {MAX_WIDTH}")
        self.alg = tree.alg_leaf
        self.cost = 0.0
        self.steps: list[D3Step] = []
        self.failures: list[str] = []
        self._phi = phi_d3(tree) if self.audit_enabled else None

    def _restore(self, tree: WeightedStemmedTree) -> None:
        for _ in range(8):
            opt, best = tree.opt_table()
            u = violated_subtree(tree, opt, self.alg, tau=self.tau)
            if u is None:
                return
            self.alg = best[u]
            tree.alg_leaf = self.alg

    def on_grow(self, tree: WeightedStemmedTree, leaf: int, h: float) -> int:
        src = self.alg
        self._restore(tree)
        if leaf == src:
            c = h if self.alg == src else tree.dist(src, self.alg) - h
        else:
            c = tree.dist(src, self.alg)
        self._finish("grow", tree, c)
        return self.alg

    def on_delete(self, tree: WeightedStemmedTree, leaf: int) -> int:
        src = self.alg
        work = tree.copy()
        opt = work.opt_table()[0]
        p = work.parent(leaf)
        ch = work.children(p)
        sib = ch[1] if ch[0] == leaf else ch[0]
        m = max(opt[work.top], opt[sib])
        target = 2.0 * m + max(1.0, m)
        if work.weight(leaf) < target:
            work.set_weight(leaf, target)
        self._restore(work)
        self._pre = tree.copy()
        self._src = src
        return self.alg

    def after_delete(self, tree: WeightedStemmedTree, rec: SmoothingRecord) -> int:
        tree.alg_leaf = self.alg
        self._restore(tree)
        self._finish("delete", tree, self._pre.dist(self._src, self.alg))
        return self.alg

    def on_fork(self, tree: WeightedStemmedTree, leaf: int, children: tuple[int, int]) -> int:
        if tree.width > MAX_WIDTH:
            raise WidthExceeded(f"width {tree.width} > {MAX_WIDTH}")
        src = self.alg
        if self.alg == leaf:
            self.alg = children[0]
        opt, best = tree.opt_table()
        if violated_subtree(tree, opt, self.alg, tau=self.tau) is not None:
            self.alg = best[tree.top]
        self._finish("fork", tree, tree.dist(src, self.alg))
        return self.alg

    def _finish(self, kind: str, tree: WeightedStemmedTree, c: float) -> None:
        self.cost += c
        if not self.audit_enabled:
            self.steps.append(D3Step(kind, c, float("nan")))
            return
        saved = tree.alg_leaf
        tree.alg_leaf = self.alg
        phi = phi_d3(tree)
        tree.alg_leaf = saved
        d = phi - self._phi
        self._phi = phi
        self.steps.append(D3Step(kind, c, d))
        scale = max(phi, self.cost, 1.0)
        bound = dk(tree.max_depth_seen) * tree.opt()
        if not leq(c, d, scale, self.tau):
            self.failures.append(f"{kind} #{len(self.steps) - 1}: cost {c!r} > dPhi {d!r}")
        if not leq(self.cost, phi, scale, self.tau):
            self.failures.append(f"{kind} #{len(self.steps) - 1}: cost {self.cost!r} > Phi {phi!r}")
        if not leq(phi, bound, scale, self.tau):
            self.failures.append(f"{kind} #{len(self.steps) - 1}: Phi {phi!r} > {bound!r}")

    @property
    def ok(self) -> bool:
        return not self.failures

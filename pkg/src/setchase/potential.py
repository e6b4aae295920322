"""Potential functions over a game state.

Both potentials are evaluated bottom-up in one pass.  ``phi_refined`` returns a
:class:`PotentialReport` with the per-subtree terms so audits can inspect the
caps, not only the total.
"""

from __future__ import annotations

from dataclasses import dataclass

from .constants import dk, switch_coeff, xk
from .tree import ABS_TOL, TAU, WeightedStemmedTree


class LevelUnderflow(ValueError):
    """A non-trivial subtree sits at level 1."""


class TrivialSubtree(ValueError):
    pass


@dataclass
class SubtreeTerms:
    level: int
    opt: float
    phi: float
    phi_capped: float
    opt_other: float = 0.0
    opt_other_capped: float = 0.0
    is_extreme: bool = False


@dataclass
class PotentialReport:
    top: int
    terms: dict[int, SubtreeTerms]

    @property
    def total(self) -> float:
        return self.terms[self.top].phi

    def __getitem__(self, u: int) -> SubtreeTerms:
        return self.terms[u]


def _layout(tree: WeightedStemmedTree, top: int, k: int | None):
    """Pre-order list of (node, level) below ``top``."""
    k = tree.max_depth_seen if k is None else k
    lvl0 = tree.level(top, k)
    order = []
    stack = [(top, lvl0)]
    nodes = tree.nodes
    while stack:
        u, i = stack.pop()
        order.append((u, i))
        if nodes[u].children and i < 2:
            raise LevelUnderflow(f"non-trivial subtree {u} at level {i}")
        for c in nodes[u].children:
            stack.append((c, i - 1))
    return order


def _alg_path(tree: WeightedStemmedTree, alg: int | None) -> set[int]:
    if alg is None:
        alg = tree.alg_leaf
    return set(tree.ancestors(alg)) if alg in tree.nodes else set()


def opt_other(tree: WeightedStemmedTree, top: int, alg: int | None = None,
              opt: dict[int, float] | None = None) -> float:
    """OPT of the side not holding the algorithm; the larger side if it is outside."""
    ch = tree.children(top)
    if not ch:
        raise TrivialSubtree(f"subtree {top} is trivial")
    if opt is None:
        opt = tree.opt_table(top)[0]
    path = _alg_path(tree, alg)
    a, b = ch
    if a in path:
        return opt[b]
    if b in path:
        return opt[a]
    return max(opt[a], opt[b])


def phi_naive(tree: WeightedStemmedTree, top: int | None = None, alg: int | None = None,
              k: int | None = None) -> float:
    """Uncapped recursive potential of the subtree ``top``."""
    top = tree.top if top is None else top
    opt = tree.opt_table(top)[0]
    path = _alg_path(tree, alg)
    nodes = tree.nodes
    phi: dict[int, float] = {}
    for u, i in reversed(_layout(tree, top, k)):
        n = nodes[u]
        if not n.children:
            phi[u] = dk(i) * n.weight
            continue
        if i < 2:
            raise LevelUnderflow(f"non-trivial subtree {u} at level {i}")
        a, b = n.children
        if a in path:
            other = opt[b]
        elif b in path:
            other = opt[a]
        else:
            other = max(opt[a], opt[b])
        phi[u] = dk(i) * n.weight + switch_coeff(i) * other + phi[a] + phi[b]
    return phi[top]


def phi_refined(tree: WeightedStemmedTree, top: int | None = None, alg: int | None = None,
                k: int | None = None, tau: float = TAU) -> PotentialReport:
    """Capped potential with per-subtree terms.

    ``phi_capped`` of a child is the value after the cap its parent applies;
    for ``top`` itself it equals ``phi``.
    """
    top = tree.top if top is None else top
    opt = tree.opt_table(top)[0]
    path = _alg_path(tree, alg)
    nodes = tree.nodes
    terms: dict[int, SubtreeTerms] = {}
    for u, i in reversed(_layout(tree, top, k)):
        n = nodes[u]
        if not n.children:
            p = dk(i) * n.weight
            terms[u] = SubtreeTerms(i, opt[u], p, p, is_extreme=True)
            continue
        if i < 2:
            raise LevelUnderflow(f"non-trivial subtree {u} at level {i}")
        a, b = n.children
        oa, ob = opt[a], opt[b]
        m = min(oa, ob)
        if a in path:
            other = ob
        elif b in path:
            other = oa
        else:
            other = max(oa, ob)
        x = xk(i)
        other_c = min(other, x * m)
        cap = dk(i - 1) * x * m
        ta, tb = terms[a], terms[b]
        ta.phi_capped = min(ta.phi, cap)
        tb.phi_capped = min(tb.phi, cap)
        p = dk(i) * n.weight + switch_coeff(i) * other_c + ta.phi_capped + tb.phi_capped
        bound = dk(i) * opt[u]
        terms[u] = SubtreeTerms(i, opt[u], p, p, other, other_c,
                                abs(p - bound) <= tau * bound + ABS_TOL)
    return PotentialReport(top, terms)


def check_claim2(tree: WeightedStemmedTree, alg: int | None = None, k: int | None = None,
                 tau: float = TAU) -> dict[int, bool]:
    """Per-subtree verdict for Phi_i(S) <= D_i OPT_S."""
    rep = phi_refined(tree, alg=alg, k=k)
    out = {}
    for u, t in rep.terms.items():
        bound = dk(t.level) * t.opt
        out[u] = t.phi <= bound + tau * max(bound, 1.0) + ABS_TOL
    return out


def balance_violations(tree: WeightedStemmedTree, k: int | None = None,
                       tau: float = TAU) -> list[int]:
    """Subtrees breaking max(OPT_L, OPT_R) <= x_i min(OPT_L, OPT_R), whatever the alg side."""
    opt = tree.opt_table()[0]
    out = []
    for u, i in _layout(tree, tree.top, k):
        ch = tree.children(u)
        if not ch or i < 2:
            continue
        oa, ob = opt[ch[0]], opt[ch[1]]
        if max(oa, ob) > xk(i) * min(oa, ob) * (1 + tau) + ABS_TOL:
            out.append(u)
    return out

"""Main deterministic policy that keeps a distorted copy of the game tree.

The policy only ever reads the distorted tree.  Auditing (potential, claims,
distortion bounds) is optional and runs after each response.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .constants import distortion_bound, dk, xk
from .engine import Policy
from .potential import PotentialReport, phi_refined
from .tree import ABS_TOL, TAU, SmoothingRecord, WeightedStemmedTree, leq

GLOBAL_C = 60.0


class PreconditionViolated(RuntimeError):
    pass


@dataclass
class Violation:
    op_index: int
    claim: str
    detail: str

    def to_dict(self) -> dict:
        return {"op": self.op_index, "claim": self.claim, "detail": self.detail}


@dataclass
class LedgerEntry:
    kind: str
    cost_true: float
    cost_distorted: float
    delta_phi: float


@dataclass
class AuditReport:
    verdicts: dict[str, bool] = field(default_factory=dict)
    details: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def fail(self, op_index: int, claim: str, detail: str) -> None:
        self.verdicts[claim] = False
        self.details.append(Violation(op_index, claim, detail))

    def to_dict(self) -> dict:
        return {"ok": self.ok, "verdicts": dict(self.verdicts),
                "violations": [v.to_dict() for v in self.details]}


CLAIMS = ("potential_covers_cost", "potential_bound", "cost_le_potential", "ratio_invariant",
          "not_capped", "dist_potential_bound", "growth_aux", "distortion_edge",
          "distortion_global", "true_le_distorted", "end_to_end")


def violated_subtree(tree: WeightedStemmedTree, opt: dict[int, float], alg: int,
                     k: int | None = None, tau: float = TAU) -> int | None:
    """Highest alg-containing subtree whose alg side is more than x_i times the other."""
    k = tree.max_depth_seen if k is None else k
    path = tree.ancestors(alg)
    nodes = tree.nodes
    depth = len(path)
    # path is bottom-up; path[j] sits at depth (depth - j)
    for j in range(len(path) - 1, 0, -1):
        u = path[j]
        side = path[j - 1]
        a, b = nodes[u].children
        other = b if side == a else a
        level = k - (depth - j) + 1
        if opt[side] > xk(level) * opt[other] * (1 + tau) + ABS_TOL:
            return u
    return None


class DistortedChaser(Policy):
    """Ratio-invariant chaser over a distorted clone of the true tree."""

    policy_id = "chaser-2k"

    def __init__(self, audit: bool = True, tau: float = TAU, strict: bool = False):
        self.audit_enabled = audit
        self.tau = tau
        self.strict = strict

    # -- lifecycle -----------------------------------------------------
    def reset(self, tree: WeightedStemmedTree) -> None:
        self.true = tree
        self.dist = tree.copy()
        self.alg = tree.alg_leaf
        self.cost_true = 0.0
        self.cost_distorted = 0.0
        self.ledger: list[LedgerEntry] = []
        self.report = AuditReport({c: True for c in CLAIMS})
        self.op_index = 0
        self.fault = None
        self._phi = phi_refined(self.dist, alg=self.alg) if self.audit_enabled else None

    @property
    def k(self) -> int:
        return self.dist.max_depth_seen

    @property
    def violations(self) -> list[Violation]:
        return self.report.details

    # -- helpers -------------------------------------------------------
    def _place(self, leaf: int) -> None:
        self.alg = leaf
        self.dist.alg_leaf = leaf

    def _restore_ratio(self) -> None:
        for _ in range(64):
            opt, best = self.dist.opt_table()
            u = violated_subtree(self.dist, opt, self.alg, tau=self.tau)
            if u is None:
                return
            self._place(best[u])
        raise RuntimeError("ratio invariant did not stabilise")

    def extreme_imbalance(self, top: int) -> None:
        """Scale non-optimal sides bottom-up so the subtree at ``top`` becomes extreme."""
        t = self.dist
        nodes = t.nodes
        k = t.max_depth_seen
        path = set(t.ancestors(self.alg))
        tau = self.tau

        def scale(u: int, f: float) -> None:
            for v in t.subtree_nodes(u):
                nodes[v].weight *= f

        def rec(u: int, level: int) -> tuple[float, int]:
            n = nodes[u]
            if not n.children:
                return n.weight, u
            a, b = n.children
            oa, la = rec(a, level - 1)
            ob, lb = rec(b, level - 1)
            if a in path or b in path:
                near, far = (a, b) if a in path else (b, a)
                o_near, o_far = (oa, ob) if a in path else (ob, oa)
                if not leq(o_near, o_far, tau=tau):
                    raise PreconditionViolated(
                        f"algorithm inside subtree {u} but not at its optimal leaf")
                best = la if near == a else lb
            elif oa < ob or (oa == ob and la < lb):
                near, far, o_near, o_far, best = a, b, oa, ob, la
            else:
                near, far, o_near, o_far, best = b, a, ob, oa, lb
            x = xk(level)
            if o_far > 0 and o_far <= x * o_near:
                f = x * o_near / o_far
                if f > 1.0:
                    scale(far, f)
            return n.weight + o_near, best

        rec(top, t.level(top, k))

    # -- game hooks ----------------------------------------------------
    def on_grow(self, tree: WeightedStemmedTree, leaf: int, h: float) -> int:
        src = self.alg
        pre_phi = self._phi
        pre_dist = self.dist.copy() if self.audit_enabled else None
        self.dist.grow(leaf, h)
        self._restore_ratio()
        dst = self.alg
        if leaf == src:
            ct = h if dst == src else tree.dist(src, dst) - h
            cd = h if dst == src else self.dist.dist(src, dst) - h
        else:
            ct = tree.dist(src, dst)
            cd = self.dist.dist(src, dst)
        self._finish("grow", ct, cd, pre_phi, growth=(pre_dist, src, leaf))
        return dst

    def on_delete(self, tree: WeightedStemmedTree, leaf: int) -> int:
        t = self.dist
        src = self.alg
        self._pre_phi = self._phi
        self._pre_dist = t.copy()
        opt = t.opt_table()[0]
        p = t.parent(leaf)
        ch = t.children(p)
        sib = ch[1] if ch[0] == leaf else ch[0]
        m = max(opt[t.top], opt[sib])
        target = 2.0 * m + max(1.0, m)
        if t.weight(leaf) < target:
            t.set_weight(leaf, target)
        self._restore_ratio()
        if t.contains(p, self.alg):
            self._place(t.opt_leaf(p))
        if self.alg == leaf:
            raise RuntimeError("virtual growth failed to evict the algorithm")
        self._del_costs = (tree.dist(src, self.alg), self._pre_dist.dist(src, self.alg))
        return self.alg

    def after_delete(self, tree: WeightedStemmedTree, rec: SmoothingRecord) -> int:
        drec = self.dist.delete_leaf(rec.deleted)
        if drec.survivor != rec.survivor:
            raise RuntimeError("distorted tree lost structural sync")
        self.extreme_imbalance(drec.survivor)
        ct, cd = self._del_costs
        self._finish("delete", ct, cd, self._pre_phi)
        return self.alg

    def on_fork(self, tree: WeightedStemmedTree, leaf: int, children: tuple[int, int]) -> int:
        t = self.dist
        src = self.alg
        pre_phi = self._phi
        k_old = t.max_depth_seen
        t.fork(leaf, ids=children)
        if self.alg == leaf:
            self._place(children[0])
        if t.max_depth_seen > k_old:
            self._place(t.opt_leaf())
        ct = tree.dist(src, self.alg)
        cd = t.dist(src, self.alg)
        if t.max_depth_seen > k_old:
            self.extreme_imbalance(t.top)
        self._finish("fork", ct, cd, pre_phi)
        return self.alg

    # -- accounting and audits -----------------------------------------
    def inject_distortion_fault(self) -> bool:
        """Push one distorted weight below its true weight (negative control)."""
        for u, n in self.true.nodes.items():
            if u != self.true.root and n.weight > 0:
                self.dist.nodes[u].weight = 0.5 * n.weight
                self.fault = u
                return True
        return False

    def _finish(self, kind: str, ct: float, cd: float, pre_phi: PotentialReport | None,
                growth=None) -> None:
        self.cost_true += ct
        self.cost_distorted += cd
        if not self.audit_enabled:
            self.ledger.append(LedgerEntry(kind, ct, cd, float("nan")))
            self.op_index += 1
            return
        post = phi_refined(self.dist, alg=self.alg)
        dphi = post.total - pre_phi.total
        self.ledger.append(LedgerEntry(kind, ct, cd, dphi))
        self._phi = post
        self._audit(post, cd, dphi, pre_phi, growth)
        self.op_index += 1
        if self.strict and not self.report.ok:
            v = self.report.details[-1]
            raise AssertionError(f"{v.claim}: {v.detail}")

    def _audit(self, rep: PotentialReport, cd: float, dphi: float,
               pre: PotentialReport | None, growth) -> None:
        r = self.report
        i = self.op_index
        tau = self.tau
        t = self.dist
        k = t.max_depth_seen
        scale = max(rep.total, self.cost_distorted, 1.0)
        if pre is not None and not leq(cd, dphi, scale, tau):
            r.fail(i, "potential_covers_cost", f"cost {cd!r} > dPhi {dphi!r}")
        if not leq(self.cost_distorted, rep.total, scale, tau):
            r.fail(i, "cost_le_potential", f"{self.cost_distorted!r} > {rep.total!r}")
        opt, best = t.opt_table()
        for u, term in rep.terms.items():
            bound = dk(term.level) * term.opt
            if not leq(term.phi, bound, max(bound, 1.0), tau):
                r.fail(i, "potential_bound", f"subtree {u}: {term.phi!r} > {bound!r}")
        path = t.ancestors(self.alg)
        for u in path:
            term = rep.terms[u]
            bound = dk(term.level) * term.opt
            lhs = term.phi + t.dist(self.alg, best[u])
            if not leq(lhs, bound, max(bound, 1.0), tau):
                r.fail(i, "dist_potential_bound", f"subtree {u}: {lhs!r} > {bound!r}")
            if term.level < k and not leq(term.phi, term.phi_capped, max(term.phi, 1.0), tau):
                r.fail(i, "not_capped", f"subtree {u} capped on the algorithm path")
        if violated_subtree(t, opt, self.alg, tau=10 * tau) is not None:
            r.fail(i, "ratio_invariant", "alg side exceeds threshold")
        worst = 1.0
        for u, n in self.true.nodes.items():
            if u == self.true.root:
                continue
            w, w0 = t.nodes[u].weight, n.weight
            if w0 == 0:
                if w > ABS_TOL:
                    r.fail(i, "distortion_edge", f"edge {u} distorted from zero")
                continue
            q = w / w0
            worst = max(worst, q)
            hi = distortion_bound(t.level(u, k), k)
            if q < 1 - tau or q > hi * (1 + tau):
                r.fail(i, "distortion_edge", f"edge {u}: ratio {q!r} outside [1, {hi!r}]")
        self.max_distortion = worst
        if not worst < GLOBAL_C:
            r.fail(i, "distortion_global", f"C = {worst!r}")
        if not leq(self.cost_true, self.cost_distorted, scale, tau):
            r.fail(i, "true_le_distorted", f"{self.cost_true!r} > {self.cost_distorted!r}")
        o0 = self.true.opt()
        if not leq(self.cost_true, GLOBAL_C * dk(k) * o0, max(o0, 1.0), tau):
            r.fail(i, "end_to_end", f"cost {self.cost_true!r} vs OPT {o0!r}")
        if growth is not None and pre is not None:
            self._audit_growth(rep, pre, growth)

    def _audit_growth(self, rep: PotentialReport, pre: PotentialReport, growth) -> None:
        """Capped potential of each alg-side subtree below a switch rises by A_P - OPT_P."""
        pre_tree, src, leaf = growth
        if self.alg == src:
            return
        path = pre_tree.ancestors(src)
        # the switch subtree is the lowest common ancestor of src and the new leaf
        post_path = set(self.dist.ancestors(self.alg))
        idx = next(j for j, u in enumerate(path) if u in post_path)
        for P in path[:idx]:
            a_p = pre_tree.root_dist(src) - pre_tree.root_dist(pre_tree.parent(P))
            lhs = rep.terms[P].phi_capped - pre.terms[P].phi_capped
            rhs = a_p - pre.terms[P].opt
            if not leq(rhs, lhs, max(rep.total, 1.0), self.tau):
                self.report.fail(self.op_index, "growth_aux",
                                 f"subtree {P}: dPhi {lhs!r} < {rhs!r}")

    def observed_distortion(self) -> float:
        """Largest distorted/true weight ratio over positive edges."""
        worst = 1.0
        for u, n in self.true.nodes.items():
            if u != self.true.root and n.weight > 0:
                worst = max(worst, self.dist.nodes[u].weight / n.weight)
        return worst

    def audit(self) -> AuditReport:
        """Re-run every state check on the current state."""
        if self._phi is None:
            self._phi = phi_refined(self.dist, alg=self.alg)
        self._audit(phi_refined(self.dist, alg=self.alg), 0.0, 0.0, None, None)
        return self.report

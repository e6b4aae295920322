"""Operation sources: random stress, scripted counterexamples, lower-bound constructions."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, fields
from typing import Generator

import numpy as np

from .constants import dk, switch_coeff, xk
from .engine import END, Delete, Fork, GameOp, Grow, ScriptedAdversary
from .potential import balance_violations, phi_naive
from .tree import WeightedStemmedTree


class BudgetExhausted(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# random stress


class RandomAdversary:
    """Legal random mix of grow / fork / delete keeping the width bounded."""

    def __init__(self, width: int = 5, ops: int = 100, seed: int = 0,
                 p_fork: float = 0.25, p_delete: float = 0.2):
        if width < 1:
            raise ValueError("width must be >= 1")
        self.width, self.ops = width, ops
        self.p_fork, self.p_delete = p_fork, p_delete
        self.rng = random.Random(seed)
        self.emitted = 0

    def _amount(self) -> float:
        r = self.rng
        if r.random() < 0.5:
            return r.choice((0.25, 0.5, 1.0, 2.0, 4.0))
        return r.expovariate(1.0) + 1e-3

    def next_op(self, tree: WeightedStemmedTree) -> GameOp:
        if self.emitted >= self.ops:
            return END
        self.emitted += 1
        leaves = tree.leaves()
        r = self.rng
        u = r.random()
        if u < self.p_fork and len(leaves) < self.width:
            return Fork(r.choice(leaves))
        if u < self.p_fork + self.p_delete and len(leaves) > 1:
            return Delete(r.choice(leaves))
        # bias growth toward the occupied leaf so switches actually happen
        leaf = tree.alg_leaf if r.random() < 0.4 else r.choice(leaves)
        return Grow(leaf, self._amount())


# ---------------------------------------------------------------------------
# scripted counterexamples


@dataclass
class ScriptCase:
    name: str
    setup: list[GameOp]
    alg_leaf: int
    trigger: GameOp
    params: dict

    def build(self) -> WeightedStemmedTree:
        """Apply the setup ops directly, then place the algorithm."""
        t = WeightedStemmedTree()
        for op in self.setup:
            if op.kind == "grow":
                t.grow(op.leaf, op.h)
            elif op.kind == "fork":
                t.fork(op.leaf)
            else:
                if t.alg_leaf == op.leaf:
                    t.alg_leaf = next(u for u in t.leaves() if u != op.leaf)
                t.delete_leaf(op.leaf)
        t.alg_leaf = self.alg_leaf
        t.validate()
        return t

    @property
    def ops(self) -> list[GameOp]:
        return [*self.setup, self.trigger]


def fig2a(a: float = 1.0, b: float = 1.0) -> ScriptCase:
    """Long single leaf beside a balanced pair; deleting it drops the uncapped potential."""
    x3 = xk(3)
    setup = [Fork(1), Grow(2, (a + b) * x3), Grow(3, b), Fork(3), Grow(4, a), Grow(5, a)]
    return ScriptCase("fig2a", setup, 4, Delete(2), {"a": a, "b": b})


def fig2b(a: float = 1.0, b: float = 1.0) -> ScriptCase:
    """Same shape with the pair imbalanced by x_2; promotion breaks the level-3 ratio."""
    x2, x3 = xk(2), xk(3)
    setup = [Fork(1), Grow(2, (a + b) * x3), Grow(3, b), Fork(3), Grow(4, a), Grow(5, a * x2)]
    return ScriptCase("fig2b", setup, 4, Delete(2), {"a": a, "b": b})


def appb_w4(a: float = 1.0, b: float = 1.0, c: float = 1.0, d: float = 1.0) -> ScriptCase:
    """Width-4 state where rate-refining the leaves of a level-3 pair fails on deletion.

    The fork/delete of leaf 6 only lifts the running depth to 4.
    """
    x3, x4 = xk(3), xk(4)
    setup = [Fork(1), Grow(2, a * x4), Grow(3, a), Fork(2), Grow(4, b), Grow(5, b * x3),
             Fork(3), Grow(6, c), Grow(7, d), Fork(6), Delete(9)]
    return ScriptCase("appB-w4", setup, 4, Delete(5), {"a": a, "b": b, "c": c, "d": d})


def phi_segments(tree: WeightedStemmedTree, top: int, segments: dict[int, list[tuple[float, int]]],
                 alg: int | None = None, k: int | None = None) -> float:
    """Capped potential where listed edges carry (length, rate level) segments.

    Unlisted edges are charged at their own level, as in the refined potential.
    """
    k = tree.max_depth_seen if k is None else k
    alg = tree.alg_leaf if alg is None else alg
    opt = tree.opt_table(top)[0]
    path = set(tree.ancestors(alg))

    def edge_term(u: int, level: int) -> float:
        if u in segments:
            return sum(dk(r) * w for w, r in segments[u])
        return dk(level) * tree.weight(u)

    def rec(u: int, level: int) -> float:
        ch = tree.children(u)
        if not ch:
            return edge_term(u, level)
        a, b = ch
        m = min(opt[a], opt[b])
        other = opt[b] if a in path else opt[a] if b in path else max(opt[a], opt[b])
        x = xk(level)
        cap = dk(level - 1) * x * m
        return (edge_term(u, level) + switch_coeff(level) * min(other, x * m)
                + min(rec(a, level - 1), cap) + min(rec(b, level - 1), cap))

    return rec(top, tree.level(top, k))


@dataclass
class ScriptResult:
    name: str
    before: float
    after: float
    flag: bool = False

    @property
    def delta(self) -> float:
        return self.after - self.before


def evaluate_script(case: ScriptCase) -> ScriptResult:
    """Measure the quantity each counterexample is about across its trigger deletion."""
    t = case.build()
    k = t.max_depth_seen
    if case.name == "fig2a":
        before = phi_naive(t, k=k)
        t.delete_leaf(case.trigger.leaf)
        return ScriptResult(case.name, before, phi_naive(t, k=k))
    if case.name == "fig2b":
        before = bool(balance_violations(t, k))
        t.delete_leaf(case.trigger.leaf)
        return ScriptResult(case.name, float(before), 0.0, flag=bool(balance_violations(t, k)))
    if case.name == "appB-w4":
        lt = t.children(t.top)[0]
        leaves = t.children(lt)
        # the pair below LT only ever held trivial subtrees: charge them at rate D_1
        seg = {u: [(t.weight(u), 1)] for u in leaves}
        before = phi_segments(t, lt, seg, k=k)
        rec = t.delete_leaf(case.trigger.leaf)
        # smoothing promotes the survivor's segments by one level
        merged = [(rec.merged_weight - rec.survivor_old_weight, t.level(rec.survivor, k))]
        merged += [(w, r + 1) for w, r in seg[rec.survivor]]
        after = phi_segments(t, rec.survivor, {rec.survivor: merged}, k=k)
        return ScriptResult(case.name, before, after)
    raise KeyError(case.name)


SCRIPTS = {"fig2a": fig2a, "fig2b": fig2b, "appB-w4": appb_w4}


# ---------------------------------------------------------------------------
# deterministic lower bound


@dataclass
class LBParams:
    k: int = 2
    eps: float = 0.05
    L: float = 1.0
    delta: float | None = None
    max_superphases: int = 200
    max_phases: int = 200_000
    early_finish: bool = True
    inner: LBParams | None = None

    def __post_init__(self):
        if not 0 < self.eps < 1 or abs(1 / self.eps - round(1 / self.eps)) > 1e-9:
            raise ValueError("eps must lie in (0, 1) with 1/eps integral")
        if self.delta is not None and not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")

    def sub(self) -> LBParams:
        """Parameters for the width-(k-1) instances played inside each phase."""
        if self.inner is not None:
            return self.inner
        kw = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "inner"}
        kw.update(k=self.k - 1, delta=None)
        return LBParams(**kw)

    def resolved_delta(self) -> float:
        """Explicit delta, else delta' eps^2 / (1 + D_k) floored at 1e-6."""
        if self.delta is not None:
            return self.delta
        if self.k <= 1:
            return 1.0
        inner = self.sub().resolved_delta()
        return max(inner * self.eps ** 2 / (1 + dk(self.k)), 1e-6)

    @classmethod
    def from_dict(cls, d: dict) -> LBParams:
        d = dict(d)
        if d.get("inner") is not None:
            d["inner"] = cls.from_dict(d["inner"])
        return cls(**d)


@dataclass
class SuperphaseLog:
    k: int
    L: float
    opt: list[float] = field(default_factory=list)   # opt_0, opt_1, ...
    phases: list[int] = field(default_factory=list)
    active_side: list[int] = field(default_factory=list)
    phase_growth: list[float] = field(default_factory=list)
    T: int | None = None
    x: float | None = None
    end_reason: str = ""


@dataclass
class InstanceResult:
    final_leaf: int | None
    length: float
    forced: float
    inside: bool
    truncated: bool
    log: SuperphaseLog | None = None
    analytic_lb: float = 0.0


class DetLowerBound:
    """Adaptive two-branch construction forcing about D_k times the final optimum.

    Each instance is a generator yielding ops; it reads the shared tree after
    every op, so nested width-(k-1) instances see the policy's responses.
    """

    def __init__(self, params: LBParams):
        self.params = params
        self.tree: WeightedStemmedTree | None = None
        self.result: InstanceResult | None = None
        self._gen = None

    def next_op(self, tree: WeightedStemmedTree) -> GameOp:
        self.tree = tree
        if self._gen is None:
            self._gen = self._instance(self.params, tree.top)
        try:
            return next(self._gen)
        except StopIteration as stop:
            self.result = stop.value
            return END

    # -- helpers -------------------------------------------------------
    def _inside(self, r: int) -> bool:
        return r in self.tree.nodes and self.tree.contains(r, self.tree.alg_leaf)

    def _side(self, r: int) -> int | None:
        for i, c in enumerate(self.tree.children(r)):
            if self.tree.contains(c, self.tree.alg_leaf):
                return i
        return None

    def _prune(self, r: int, side: int, keep: int | None = None) -> Generator[GameOp, None, None]:
        """Delete leaves of branch ``side`` of ``r`` until only ``keep`` (default: optimal) is left."""
        t = self.tree
        top = t.children(r)[side]
        if keep is None:
            keep = t.opt_leaf(top)
        while True:
            top = t.children(r)[side]
            rest = [u for u in t.leaves(top) if u != keep]
            if not rest:
                return
            rest.sort(key=lambda u: (u == t.alg_leaf, -t.root_dist(u), u))
            yield Delete(rest[0])

    def _drop_branch(self, r: int, side: int) -> Generator[GameOp, None, int]:
        """Delete every leaf of branch ``side``; returns the surviving leaf of the other one."""
        t = self.tree
        other = t.children(r)[1 - side]
        keep = t.opt_leaf(other)
        while r in t.nodes:
            top = t.children(r)[side]
            leaves = t.leaves(top)
            leaves.sort(key=lambda u: (u == t.alg_leaf, -t.root_dist(u), u))
            yield Delete(leaves[0])
        return keep

    # -- the construction ----------------------------------------------
    def _instance(self, p: LBParams, r: int) -> Generator[GameOp, None, InstanceResult]:
        t = self.tree
        L = p.L
        if p.k == 1:
            yield Grow(r, L)
            inside = self.tree.alg_leaf == r
            return InstanceResult(r, L, L if inside else 0.0, inside, False)
        delta = p.resolved_delta()
        eps = p.eps
        sub = p.sub()
        Lp = L * delta * eps
        sub = LBParams(**{**{f.name: getattr(sub, f.name) for f in fields(sub)}, "L": Lp})
        floor = sub.resolved_delta() * Lp
        log = SuperphaseLog(p.k, L)
        frozen = InstanceResult(None, 0.0, 0.0, False, False, log)

        yield Fork(r)
        t = self.tree
        if not self._inside(r):
            return frozen
        side = self._side(r)
        ch = t.children(r)
        yield Grow(ch[1 - side], delta * L)
        if not self._inside(r):
            return frozen
        yield Grow(ch[side], delta * L)
        if not self._inside(r):
            return frozen

        opt = log.opt
        opt.append(delta * L)
        forced = 0.0
        analytic = 0.0
        phases = 0
        ratios: list[float] = []  # ratios[t-1] = opt_{t+1} / opt_t
        reason = ""
        truncated = False
        keep_side = None
        while True:
            side = self._side(r)
            opt_t = t.opt(t.children(r)[1 - side])
            opt.append(opt_t)
            tt = len(opt) - 1
            log.active_side.append(side)
            n_ph = 0
            switched = False
            while True:
                act = t.children(r)[side]
                act_len = t.opt(act)
                if p.early_finish and opt_t <= L and act_len >= dk(p.k) * opt_t:
                    reason = "early-finish"
                    break
                if act_len > L:
                    reason, truncated = "budget", True
                    break
                if phases >= p.max_phases:
                    reason, truncated = "max-phases", True
                    break
                phases += 1
                n_ph += 1
                res = yield from self._instance(sub, act)
                if not self._inside(r):
                    return frozen
                new_len = t.opt(t.children(r)[side])
                if self._side(r) != side:
                    forced += act_len + opt_t
                    yield from self._prune(r, side)
                    switched = True
                    break
                log.phase_growth.append(new_len - act_len)
                if res.inside:
                    forced += res.forced
            log.phases.append(n_ph)
            opt_next = t.opt(t.children(r)[side])
            analytic += max(0.0, (dk(p.k - 1) - eps) * (opt_next - opt[tt - 1] - Lp)
                         + opt_next + opt_t - Lp)
            if not switched:
                keep_side = 1 - side
                break
            ratios.append(opt_next / opt_t if opt_t > 0 else math.inf)
            lo = max(1, math.ceil(eps * tt))
            window = ratios[lo - 1:tt - 1]
            if (opt_t >= delta * L / eps and opt_next >= delta * L / eps
                    and (not window or ratios[-1] >= max(window) - eps)):
                reason, keep_side = "stopping-rule", 1 - side
                log.T = tt
                log.x = max(window) if window else ratios[-1]
                break
            if opt_next > L:
                reason, truncated, keep_side = "opt-exceeds-L", True, 1 - side
                break
            if tt >= p.max_superphases:
                reason, truncated, keep_side = "max-superphases", True, 1 - side
                break
        log.end_reason = reason
        if log.T is None:
            log.T = len(opt) - 1
        drop = 1 - keep_side
        alg_was_dropped = t.contains(t.children(r)[drop], t.alg_leaf)
        pre_len = t.opt(t.children(r)[drop])
        final_len = t.opt(t.children(r)[keep_side])
        final = yield from self._drop_branch(r, drop)
        inside = t.contains(final, t.alg_leaf) if final in t.nodes else False
        if alg_was_dropped and inside:
            forced += pre_len + final_len
        return InstanceResult(final, final_len, forced if inside else 0.0, inside,
                              truncated, log, analytic)


# Desk-scale settings that finish in well under a million ops.  Explicit
# deltas replace the floored default, which is far too fine beyond k = 2.
LB_PRESETS: dict[int, LBParams] = {
    2: LBParams(k=2, eps=0.05, max_superphases=40),
    3: LBParams(k=3, eps=0.25, delta=0.01, inner=LBParams(k=2, eps=0.1, delta=0.02)),
    4: LBParams(k=4, eps=0.5, delta=0.05,
                inner=LBParams(k=3, eps=0.5, delta=0.05, inner=LBParams(k=2, eps=0.5, delta=0.1))),
}


def lb_params(params: dict) -> LBParams:
    """Preset for ``params["k"]`` (when one exists) overridden by the other given fields."""
    params = dict(params)
    k = params.get("k", 2)
    if "inner" in params or k not in LB_PRESETS:
        return LBParams.from_dict(params)
    base = LB_PRESETS[k]
    kw = {f.name: getattr(base, f.name) for f in fields(base)}
    kw.update(params)
    return LBParams(**kw)


def det_lower_bound(params: LBParams, policy, max_ops: int = 10**6):
    """Play the construction against ``policy``; returns (transcript, game result, instance result)."""
    from .engine import run_game

    adv = DetLowerBound(params)
    tr, res = run_game(adv, policy, max_ops=max_ops)
    out = adv.result
    if out is None:
        out = InstanceResult(None, 0.0, 0.0, False, True)
    return tr, res, out


# ---------------------------------------------------------------------------
# adaptive adversary


def c_const(k: int) -> float:
    """Stem length 2^{k^2} for a width-k instance."""
    return float(2 ** (k * k))


@dataclass
class AdaptiveParams:
    k: int = 2
    num_subinstances: int = 50
    trials: int = 10_000
    rng_seed: int = 0
    max_ops: int = 100_000

    def C(self, k: int) -> float:
        return c_const(k)


@dataclass
class _Node:
    k: int
    choice: int
    stem_paid: float = 0.0
    subs: list[tuple[int, _Node]] = field(default_factory=list)
    start: list[int | None] = field(default_factory=lambda: [None, None])
    leaf: int | None = None  # width-1 instances only

    def adv_cost(self) -> float:
        return self.stem_paid + sum(s.adv_cost() for side, s in self.subs if side == self.choice)

    def side_position(self, side: int) -> int | None:
        last = [s for sd, s in self.subs if sd == side]
        return last[-1].position() if last else self.start[side]

    def position(self) -> int | None:
        if self.k == 1:
            return self.leaf
        return self.side_position(self.choice)


class AdaptiveAdversary:
    """Randomised adversary that serves each request as soon as it is issued."""

    def __init__(self, params: AdaptiveParams, rng: np.random.Generator):
        self.p = params
        self.rng = rng
        self.tree = None
        self.root_node: _Node | None = None
        self.emitted = 0
        self._gen = None

    def next_op(self, tree: WeightedStemmedTree) -> GameOp:
        self.tree = tree
        if self._gen is None:
            self._gen = self._instance(self.p.k, tree.top, top_level=True)
        if self.emitted >= self.p.max_ops:
            return END
        try:
            op = next(self._gen)
        except StopIteration:
            return END
        self.emitted += 1
        return op

    def _inside(self, r: int) -> bool:
        return r in self.tree.nodes and self.tree.contains(r, self.tree.alg_leaf)

    def _side(self, r: int) -> int | None:
        for i, c in enumerate(self.tree.children(r)):
            if self.tree.contains(c, self.tree.alg_leaf):
                return i
        return None

    def _instance(self, k: int, r: int, top_level: bool = False) -> Generator[GameOp, None, _Node]:
        t = self.tree
        if k == 1:
            node = _Node(1, 0, leaf=r)
            if self.root_node is None:
                self.root_node = node
            yield Grow(r, c_const(1))
            node.stem_paid = c_const(1)
            return node
        node = _Node(k, int(self.rng.integers(2)))
        if self.root_node is None:
            self.root_node = node
        yield Fork(r)
        ch = list(t.children(r))
        node.start = ch
        if not self._inside(r):
            return node
        side = self._side(r)
        order = [1 - side, side]
        for s in order:
            yield Grow(ch[s], c_const(k))
            if s == node.choice:
                node.stem_paid = c_const(k)
            if not self._inside(r):
                return node
        played = 0
        while not top_level or played < self.p.num_subinstances:
            side = self._side(r)
            leaf = t.children(r)[side]
            sub = yield from self._instance(k - 1, leaf)
            node.subs.append((side, sub))
            played += 1
            if not self._inside(r):
                return node
            if self._side(r) != side:
                keep = node.side_position(side)
                top = t.children(r)[side]
                while True:
                    top = t.children(r)[side]
                    rest = [u for u in t.leaves(top) if u != keep]
                    if not rest:
                        break
                    yield Delete(rest[0])
        return node


@dataclass
class AdaptiveTrial:
    alg_cost: float
    adv_cost: float
    choice: int
    adv_position_is_leaf: bool
    ops: int


@dataclass
class AdaptiveResult:
    k: int
    C_k: float
    trials: list[AdaptiveTrial]
    bootstrap_frac: float

    @property
    def mean_alg(self) -> float:
        return float(np.mean([t.alg_cost for t in self.trials]))

    @property
    def mean_adv(self) -> float:
        return float(np.mean([t.adv_cost for t in self.trials]))

    @property
    def chi_square(self) -> float:
        n = len(self.trials)
        ones = sum(t.choice for t in self.trials)
        exp = n / 2
        return ((ones - exp) ** 2 + (n - ones - exp) ** 2) / exp

    @property
    def chi_square_p(self) -> float:
        return math.erfc(math.sqrt(self.chi_square / 2))


def adaptive_adversary(params: AdaptiveParams, policy_factory, bootstrap: int = 2000,
                       share_realization: bool | None = None) -> AdaptiveResult:
    """Monte-Carlo estimate of ALG(s) >= 2^{k-1} (ADV(s) - C_k) against a deterministic policy.

    For k <= 2 the op stream does not depend on the coins (width-1 sub-instances
    draw none), so by default the game is played once and each trial only redraws
    the top-level branch choice from its own generator.  The numbers equal those
    of full per-trial simulation.
    """
    from .engine import run_game

    if share_realization is None:
        share_realization = params.k <= 2
    seeds = np.random.SeedSequence(params.rng_seed).spawn(params.trials + 1)
    trials = []
    shared = None
    for i in range(params.trials):
        rng = np.random.default_rng(seeds[i])
        if share_realization and shared is not None:
            tr, res, node = shared
            node.choice = int(rng.integers(2))
        else:
            adv = AdaptiveAdversary(params, rng)
            tr, res = run_game(adv, policy_factory(), max_ops=params.max_ops + 1)
            node = adv.root_node
            if share_realization:
                shared = (tr, res, node)
        pos = node.position()
        trials.append(AdaptiveTrial(res.cost, node.adv_cost(), node.choice,
                                    pos is not None and tr.final_tree.is_leaf(pos), len(tr.steps)))
    alg = np.array([t.alg_cost for t in trials])
    advc = np.array([t.adv_cost for t in trials])
    brng = np.random.default_rng(seeds[-1])
    n = len(trials)
    lhs = np.empty(bootstrap)
    rhs = np.empty(bootstrap)
    for b in range(bootstrap):
        idx = brng.integers(0, n, size=n)
        lhs[b] = alg[idx].mean()
        rhs[b] = 2 ** (params.k - 1) * (advc[idx].mean() - c_const(params.k))
    frac = float(np.mean(lhs >= rhs))
    return AdaptiveResult(params.k, c_const(params.k), trials, frac)


# ---------------------------------------------------------------------------
# registry


def make_adversary(adv_id: str, params: dict | None = None, seed: int = 0):
    params = dict(params or {})
    if adv_id == "random":
        return RandomAdversary(seed=seed, **params)
    if adv_id == "lb-det":
        return DetLowerBound(lb_params(params))
    if adv_id == "lb-adaptive":
        kw = {"rng_seed": seed, **params}
        p = AdaptiveParams(**kw)
        return AdaptiveAdversary(p, np.random.default_rng(p.rng_seed))
    if adv_id.startswith("script:"):
        name = adv_id.split(":", 1)[1]
        if name not in SCRIPTS:
            raise KeyError(f"unknown script {name!r}")
        return ScriptedAdversary(SCRIPTS[name](**params).ops)
    raise KeyError(f"unknown adversary {adv_id!r}")


ADVERSARY_IDS = ("lb-det", "lb-adaptive", "script:fig2a", "script:fig2b", "script:appB-w4", "random")

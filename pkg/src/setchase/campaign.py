"""Randomised and exhaustive invariant campaigns shared by the CLI, tests and scripts."""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field

from .adversaries import SCRIPTS, RandomAdversary, evaluate_script
from .chaser import GLOBAL_C, DistortedChaser
from .constants import dk, recursion_residual, xk
from .d3 import D3Chaser
from .engine import Delete, Fork, Grow, apply_and_charge, run_game
from .lgt import binarize, brute_force_opt, offline_opt, random_instance, reduce_and_run
from .tree import TAU, WeightedStemmedTree, leq


@dataclass
class CampaignResult:
    name: str
    games: int = 0
    ops: int = 0
    failures: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        extra = " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.stats.items())
        return f"[{status}] {self.name}: games={self.games} ops={self.ops} failures={len(self.failures)} {extra}".rstrip()


def game_shape(rng: random.Random, max_width: int, long_every: int = 100) -> tuple[int, int]:
    """Width and length of one random game; every ``long_every``-th game is long."""
    width = rng.randint(1, max_width)
    n = 1000 if rng.randrange(long_every) == 0 else rng.randint(10, 120)
    return width, n


def constants_check(kmax: int = 20) -> CampaignResult:
    res = CampaignResult("constants")
    if dk(2) != 9.0:
        res.failures.append(f"D_2 = {dk(2)!r}")
    worst = 0.0
    for k in range(2, kmax + 1):
        r = recursion_residual(k)
        worst = max(worst, r)
        if not r < 1e-9:
            res.failures.append(f"recursion residual at k={k}: {r!r}")
        if not dk(k) <= 2 ** (k + 4) - (2 ** (k + 9)) ** 0.5:
            res.failures.append(f"D_{k} = {dk(k)!r} above the closed-form bound")
    res.stats = {"max_residual": worst, "D3": dk(3), "x3": xk(3)}
    return res


def scripts_check() -> CampaignResult:
    res = CampaignResult("scripts")
    r = evaluate_script(SCRIPTS["fig2a"]())
    if abs(r.delta - (-2.472135)) > 1e-3:
        res.failures.append(f"fig2a dPhi {r.delta!r}")
    r2 = evaluate_script(SCRIPTS["fig2b"]())
    if not r2.flag:
        res.failures.append("fig2b: no ratio violation after deletion")
    r3 = evaluate_script(SCRIPTS["appB-w4"]())
    if not r3.delta < 0:
        res.failures.append(f"appB-w4 dPhi {r3.delta!r} not negative")
    res.games = 3
    res.stats = {"fig2a": r.delta, "appB": r3.delta}
    return res


def _game_rng(seed: int, g: int) -> random.Random:
    return random.Random(f"{seed}:{g}")


def _merge(name: str, parts: list[CampaignResult], maxed: tuple[str, ...]) -> CampaignResult:
    out = CampaignResult(name)
    for p in parts:
        out.games += p.games
        out.ops += p.ops
        out.failures += p.failures
        for k, v in p.stats.items():
            out.stats[k] = max(out.stats.get(k, v), v) if k in maxed else v
    return out


def _fan_out(fn, games: int, workers: int, **kw) -> list[CampaignResult]:
    """Split ``range(games)`` into contiguous chunks; results keep chunk order."""
    if workers <= 1:
        return [fn(0, games, **kw)]
    from concurrent.futures import ProcessPoolExecutor

    step = -(-games // (workers * 4))
    bounds = [(a, min(a + step, games)) for a in range(0, games, step)]
    with ProcessPoolExecutor(workers) as ex:
        futs = [ex.submit(fn, a, b, **kw) for a, b in bounds]
        return [f.result() for f in futs]


def chaser_campaign(games: int = 10_000, max_width: int = 5, seed: int = 0,
                    inject_fault: bool = False, long_every: int = 100,
                    workers: int = 1) -> CampaignResult:
    """Audited games of the distortion-based chaser against random adversaries.

    Besides the per-op audit, width-2 games must stay within D_2 * OPT at every state.
    Game ``g`` is seeded from ``(seed, g)`` alone, so any worker count gives the same result.
    """
    parts = _fan_out(_chaser_chunk, games, workers, max_width=max_width, seed=seed,
                     inject_fault=inject_fault, long_every=long_every)
    return _merge("chaser-2k", parts, ("max_C", "max_ratio"))


def _chaser_chunk(lo: int, hi: int, max_width: int, seed: int, inject_fault: bool,
                  long_every: int) -> CampaignResult:
    res = CampaignResult("chaser-2k")
    worst_c, worst_ratio = 1.0, 0.0
    for g in range(lo, hi):
        rng = _game_rng(seed, g)
        width, n = game_shape(rng, max_width, long_every)
        pol = DistortedChaser(audit=True)
        adv = RandomAdversary(width=width, ops=n, seed=rng.getrandbits(32))
        w2 = []

        def on_step(tree, rec, total, pol=pol, w2=w2):
            if inject_fault and g == lo and pol.op_index == 3:
                pol.inject_distortion_fault()
                pol.audit()
            if tree.width <= 2 and width <= 2:
                o = tree.opt()
                if not leq(pol.cost_true, dk(2) * o, max(o, 1.0), TAU):
                    w2.append(f"width-2 cost {pol.cost_true!r} > 9*{o!r}")

        tr, gr = run_game(adv, pol, on_step=on_step)
        res.games += 1
        res.ops += len(tr.steps)
        for v in pol.violations:
            res.failures.append(f"game {g} op {v.op_index}: {v.claim}: {v.detail}")
        res.failures.extend(f"game {g}: {m}" for m in w2)
        worst_c = max(worst_c, pol.observed_distortion())
        if gr.opt > 0:
            worst_ratio = max(worst_ratio, gr.ratio)
    res.stats = {"max_C": worst_c, "C_bound": GLOBAL_C, "max_ratio": worst_ratio}
    return res


def d3_campaign(games: int = 10_000, seed: int = 0, long_every: int = 100,
                workers: int = 1) -> CampaignResult:
    parts = _fan_out(_d3_chunk, games, workers, seed=seed, long_every=long_every)
    return _merge("chaser-d3", parts, ("max_ratio",))


def _d3_chunk(lo: int, hi: int, seed: int, long_every: int) -> CampaignResult:
    res = CampaignResult("chaser-d3")
    worst = 0.0
    for g in range(lo, hi):
        rng = _game_rng(seed, g)
        _, n = game_shape(rng, 3, long_every)
        pol = D3Chaser(audit=True)
        adv = RandomAdversary(width=3, ops=n, seed=rng.getrandbits(32))
        fails = []

        def on_step(tree, rec, total, fails=fails):
            o = tree.opt()
            if not leq(total, dk(3) * o, max(o, 1.0), TAU):
                fails.append(f"cost {total!r} > D3*{o!r}")

        tr, gr = run_game(adv, pol, on_step=on_step)
        res.games += 1
        res.ops += len(tr.steps)
        res.failures.extend(f"game {g}: {m}" for m in fails + pol.failures)
        if gr.opt > 0:
            worst = max(worst, gr.ratio)
    res.stats = {"max_ratio": worst, "D3": dk(3)}
    return res


def _grid_moves(tree: WeightedStemmedTree, amounts: tuple[float, ...], width: int):
    leaves = tree.leaves()
    for u in leaves:
        for h in amounts:
            yield Grow(u, h)
    if len(leaves) < width:
        for u in leaves:
            yield Fork(u)
    if len(leaves) > 1:
        for u in leaves:
            yield Delete(u)


def d3_grid_sweep(depth: int = 5, amounts: tuple[float, ...] = (0.5, 1.0, 3.0)) -> CampaignResult:
    """Every op sequence of length <= ``depth`` over a small move grid, width <= 3."""
    res = CampaignResult("chaser-d3-grid")
    worst = 0.0

    def rec(tree, pol, total, d):
        nonlocal worst
        if d == depth:
            return
        for op in _grid_moves(tree, amounts, 3):
            t2, p2 = copy.deepcopy((tree, pol))
            p2.failures = []
            r = apply_and_charge(t2, op, p2)
            tot = total + r.cost
            o = t2.opt()
            res.ops += 1
            if not leq(tot, dk(3) * o, max(o, 1.0), TAU):
                res.failures.append(f"{op}: cost {tot!r} > D3*{o!r}")
            res.failures.extend(p2.failures)
            if o > 0:
                worst = max(worst, tot / o)
            rec(t2, p2, tot, d + 1)
        res.games += 1

    t = WeightedStemmedTree()
    pol = D3Chaser(audit=True)
    pol.reset(t)
    rec(t, pol, 0.0, 0)
    res.stats = {"max_ratio": worst}
    return res


def lgt_campaign(instances: int = 1000, seed: int = 0, policy_factory=DistortedChaser) -> CampaignResult:
    from .engine import replay

    res = CampaignResult("lgt-reduction")
    rng = random.Random(seed)
    for i in range(instances):
        inst = random_instance(rng.randint(2, 8), rng.randint(1, 4), rng.getrandbits(32))
        b = binarize(inst)
        r = reduce_and_run(b, policy_factory(audit=False))
        direct, _ = replay(r.transcript.ops, policy_factory(audit=False))
        res.games += 1
        res.ops += len(r.transcript.steps)
        if direct.total_cost != r.cost:
            res.failures.append(f"instance {i}: reduction {r.cost!r} != direct {direct.total_cost!r}")
        o = offline_opt(inst)
        if o != brute_force_opt(inst):
            res.failures.append(f"instance {i}: DP {o!r} != brute force")
        if abs(o - r.transcript.final_opt) > TAU * max(1.0, o):
            res.failures.append(f"instance {i}: DP {o!r} != game OPT {r.transcript.final_opt!r}")
        if r.transcript.width_seen > inst.width:
            res.failures.append(f"instance {i}: width {r.transcript.width_seen} > {inst.width}")
    return res

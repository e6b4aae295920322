"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import pytest

from setchase import campaign
from setchase.adversaries import (LB_PRESETS, SCRIPTS, AdaptiveParams, RandomAdversary,
                                  adaptive_adversary, det_lower_bound, evaluate_script, make_adversary)
from setchase.cli import main
from setchase.constants import dk, growth_bound, recursion_residual
from setchase.engine import run_game
from setchase.policies import POLICIES, make_policy

TAU = 1e-9


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return emit


def test_c1_constants(report):
    t0 = time.perf_counter()
    resid = max(recursion_residual(k) for k in range(2, 21))
    bound_ok = all(dk(k) <= growth_bound(k) for k in range(2, 21))
    dt = time.perf_counter() - t0
    ok = dk(2) == 9.0 and resid < 1e-9 and bound_ok and dt < 1.0
    report(1, ok, f"D_2={dk(2)!r} (exact 9), max recursion residual k=2..20 {resid:.3g} (< 1e-9), "
                  f"closed-form bound holds k=2..20: {bound_ok}, {dt:.3f}s (< 1 s)")
    assert ok


def test_c2_counterexamples(report):
    t0 = time.perf_counter()
    a = evaluate_script(SCRIPTS["fig2a"]())
    b = evaluate_script(SCRIPTS["fig2b"]())
    c = evaluate_script(SCRIPTS["appB-w4"]())
    dt = time.perf_counter() - t0
    ok = abs(a.delta - (-2.472135)) <= 1e-3 and b.flag and c.delta < 0 and dt < 1.0
    report(2, ok, f"fig2a dPhi/a={a.delta:.7f} (-2.472135 +- 0.001), fig2b violation flag={b.flag}, "
                  f"appB-w4 dPhi={c.delta:.6f} (< 0), {dt:.3f}s (< 1 s)")
    assert ok


@pytest.fixture(scope="module")
def chaser_runs():
    t0 = time.perf_counter()
    res = campaign.chaser_campaign(games=10_000, max_width=5, seed=20261016)
    return res, time.perf_counter() - t0


END_TO_END = ("end_to_end", "width-2")


def test_c3_chaser_invariants(report, chaser_runs):
    res, dt = chaser_runs
    bad = [f for f in res.failures if not any(tag in f for tag in END_TO_END)]
    ok = res.games >= 10_000 and not bad and res.stats["max_C"] < 60 and dt < 300
    report(3, ok, f"{res.games} games / {res.ops} ops, width<=5, per-op audit violations={len(bad)} "
                  f"(tau={TAU}), max observed C={res.stats['max_C']:.4f} (< 60), {dt:.0f}s (target < 300 s)")
    assert not bad, bad[:5]
    assert ok


def test_c4_end_to_end(report, chaser_runs):
    res, _ = chaser_runs
    bad = [f for f in res.failures if any(tag in f for tag in END_TO_END)]
    ok = not bad
    report(4, ok, f"cost_true <= 60*D_k*OPT at every state, and cost <= 9*OPT + tau on width-2 games: "
                  f"{len(bad)} violations over {res.games} games (max final ratio {res.stats['max_ratio']:.3f})")
    assert ok, bad[:5]


def test_c5_d3_exact(report):
    t0 = time.perf_counter()
    rnd = campaign.d3_campaign(games=10_000, seed=20261016)
    grid = campaign.d3_grid_sweep(depth=6)
    dt = time.perf_counter() - t0
    ok = rnd.ok and grid.ok and dt < 300
    report(5, ok, f"{rnd.games} random width-3 games + {grid.ops} grid ops (depth 6): cost <= D3*OPT + tau "
                  f"and dPhi >= dcost violations={len(rnd.failures) + len(grid.failures)}, "
                  f"max ratio {max(rnd.stats['max_ratio'], grid.stats['max_ratio']):.3f} (D3={dk(3):.4f}), "
                  f"{dt:.0f}s (< 300 s)")
    assert ok, (rnd.failures + grid.failures)[:5]


def test_c6_lower_bound_pressure(report):
    lines = []
    ok = True
    for pid in sorted(POLICIES):
        tr, res, out = det_lower_bound(LB_PRESETS[2], make_policy(pid))
        good = res.ratio >= 8.5 and res.cost >= out.forced * (1 - TAU)
        ok &= good
        lines.append(f"k=2 {pid} ratio={res.ratio:.3f} (>= 8.5) cost>=forced_lb={res.cost >= out.forced * (1 - TAU)}")
    tr, res, out = det_lower_bound(LB_PRESETS[3], make_policy("chaser-2k"))
    target = 0.8 * dk(3)
    good = res.ratio >= target and res.cost >= out.forced * (1 - TAU) and tr.final_tree.width == 1
    ok &= good
    lines.append(f"k=3 chaser-2k ratio={res.ratio:.3f} (>= {target:.3f}) cost>=forced_lb="
                 f"{res.cost >= out.forced * (1 - TAU)}")
    report(6, ok, "; ".join(lines))
    assert ok


def test_c7_adaptive(report):
    t0 = time.perf_counter()
    r = adaptive_adversary(AdaptiveParams(k=2, num_subinstances=50, trials=10_000, rng_seed=20261016),
                           lambda: make_policy("chaser-2k"))
    dt = time.perf_counter() - t0
    ok = r.bootstrap_frac >= 0.95 and dt < 120
    report(7, ok, f"k=2 C_2={r.C_k:g}: mean_alg={r.mean_alg:.3f} vs 2*(mean_adv - C_2)="
                  f"{2 * (r.mean_adv - r.C_k):.3f}; bootstrap support {r.bootstrap_frac:.3f} (>= 0.95), "
                  f"branch chi-square p={r.chi_square_p:.3f}, {dt:.1f}s (< 120 s)")
    assert ok


def test_c8_reduction_fidelity(report):
    res = campaign.lgt_campaign(instances=1000, seed=20261016)
    report(8, res.ok, f"{res.games} random layered instances (width <= 4): reduction cost == direct game cost "
                      f"bit-for-bit, DP == brute force, DP == final game OPT within tau; "
                      f"mismatches={len(res.failures)}")
    assert res.ok, res.failures[:5]


def test_c9_determinism(report, tmp_path):
    same = True
    for adv_id, params in [("random", {"width": 5, "ops": 300}), ("lb-det", {"k": 2}),
                           ("lb-adaptive", {"k": 2, "num_subinstances": 20})]:
        for pid in ("chaser-2k", "greedy"):
            a, _ = run_game(make_adversary(adv_id, params, 7), make_policy(pid))
            b, _ = run_game(make_adversary(adv_id, params, 7), make_policy(pid))
            same &= a.to_jsonl() == b.to_jsonl()
    args = ["bench", "--policies", "chaser-2k,greedy,lazy", "--adversaries", "random,lb-det",
            "--k", "2", "--seeds", "0,1,2"]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    main(args + ["--out", str(p1)])
    main(args + ["--out", str(p2)])
    csv_same = p1.read_bytes() == p2.read_bytes()
    ok = same and csv_same
    report(9, ok, f"transcripts byte-identical across reruns: {same}; bench CSV byte-identical: {csv_same}")
    assert ok

"""setchase command line: run, gen, verify, bench, dk-table."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import campaign
from .adversaries import ADVERSARY_IDS, make_adversary
from .chaser import DistortedChaser
from .constants import table
from .engine import IllegalOp, run_game
from .lgt import LayeredInstance, NotATree, WidthMismatch, binarize, ops_to_instance, reduce_and_run
from .policies import POLICIES, make_policy

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    policy: str = "chaser-2k"
    adversary: str | None = None
    params: dict = field(default_factory=dict)
    seeds: list[int] = field(default_factory=lambda: [0])
    out: Path | None = None
    audit: bool = False
    max_ops: int = 10**6

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; known: {sorted(POLICIES)}")
        if self.adversary is not None and self.adversary not in ADVERSARY_IDS:
            raise ConfigError(f"unknown adversary {self.adversary!r}; known: {list(ADVERSARY_IDS)}")
        env = os.environ.get("SETCHASE_SEED")
        if env is not None:
            try:
                self.seeds = [int(env)]
            except ValueError:
                raise ConfigError(f"SETCHASE_SEED={env!r} is not an integer") from None


def _params(text: str | None, k: int | None = None, adversary: str | None = None) -> dict:
    try:
        p = json.loads(text) if text else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"--params is not JSON: {e}") from None
    if not isinstance(p, dict):
        raise ConfigError("--params must be a JSON object")
    if k is not None:
        p["width" if adversary == "random" else "k"] = k
    return p


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None


# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = RunConfig("run", args.policy, args.adversary, _params(args.params, args.k, args.adversary),
                    [args.seed], args.out, args.audit, args.max_ops)
    pol = make_policy(cfg.policy, audit=cfg.audit)
    if args.instance:
        try:
            inst = LayeredInstance.from_json(Path(args.instance).read_text())
        except (OSError, json.JSONDecodeError, KeyError, NotATree, WidthMismatch) as e:
            raise ConfigError(f"cannot load instance: {e}") from None
        res = reduce_and_run(binarize(inst), pol, max_ops=cfg.max_ops)
        tr = res.transcript
        extra = {"route_cost": res.route_cost}
    else:
        if cfg.adversary is None:
            raise ConfigError("run needs --instance or --adversary")
        adv = _adversary(cfg.adversary, cfg.params, cfg.seeds[0])
        tr, _ = run_game(adv, pol, max_ops=cfg.max_ops)
        extra = {}
    if cfg.out:
        cfg.out.write_text(tr.to_jsonl())
    summary = {**tr.summary(), **extra}
    code = EXIT_OK
    if cfg.audit and isinstance(pol, DistortedChaser) and pol.violations:
        summary["failed_claims"] = sorted({v.claim for v in pol.violations})
        code = EXIT_INVARIANT
    if cfg.audit and hasattr(pol, "failures") and pol.failures:
        summary["failures"] = pol.failures[:5]
        code = EXIT_INVARIANT
    print(json.dumps(summary))
    return code


def _adversary(adv_id: str, params: dict, seed: int):
    try:
        return make_adversary(adv_id, params, seed)
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"bad parameters for {adv_id}: {e}") from None


def cmd_gen(args) -> int:
    """Play a generator against a policy and save its op stream (adaptive ones need the policy)."""
    cfg = RunConfig("gen", args.policy, args.adversary, _params(args.params, args.k, args.adversary),
                    [args.seed], args.out, False, args.max_ops)
    adv = _adversary(cfg.adversary, cfg.params, cfg.seeds[0])
    tr, _ = run_game(adv, make_policy(cfg.policy), max_ops=cfg.max_ops)
    ops = tr.ops
    if cfg.out:
        cfg.out.write_text("".join(json.dumps(op.to_dict()) + "\n" for op in ops))
    if args.export_lgt:
        Path(args.export_lgt).write_text(ops_to_instance(ops).to_json())
    print(json.dumps({"adversary": cfg.adversary, "ops": len(ops), **tr.summary()}))
    return EXIT_OK


SUITES = ("all", "constants", "scripts", "chaser", "d3", "lgt")


def cmd_verify(args) -> int:
    seed = RunConfig("verify", seeds=[args.seed]).seeds[0]
    results = []
    if args.inject_fault:
        if args.inject_fault != "distortion":
            raise ConfigError(f"unknown fault {args.inject_fault!r}")
        results.append(campaign.chaser_campaign(games=3, seed=seed, inject_fault=True))
    else:
        s = args.suite
        if s in ("all", "constants"):
            results.append(campaign.constants_check())
            if s == "constants":
                for row in table(args.kmax):
                    print(" ".join(f"{k}={v:.12g}" if isinstance(v, float) else f"{k}={v}"
                                   for k, v in row.items()))
        if s in ("all", "scripts"):
            results.append(campaign.scripts_check())
        if s in ("all", "chaser"):
            results.append(campaign.chaser_campaign(games=args.games, seed=seed, workers=args.workers))
        if s in ("all", "d3"):
            results.append(campaign.d3_campaign(games=args.games, seed=seed, workers=args.workers))
            results.append(campaign.d3_grid_sweep(depth=4))
        if s in ("all", "lgt"):
            results.append(campaign.lgt_campaign(instances=args.games, seed=seed))
    bad = False
    for r in results:
        print(r.line())
        for f in r.failures[:5]:
            print("   ", f)
        if r.failures:
            claims = sorted({f.split(": ")[1] for f in r.failures if f.count(": ") >= 2})
            if claims:
                print("    failing claims:", ", ".join(claims))
        bad |= not r.ok
    return EXIT_INVARIANT if bad else EXIT_OK


BENCH_FIELDS = ["instance", "algorithm", "k", "seed", "cost", "opt", "ratio", "C", "ops", "truncated", "error"]


def _bench_task(task: tuple) -> dict:
    policy_id, adv_id, k, seed, params, max_ops, timing = task
    row = {"instance": adv_id, "algorithm": policy_id, "k": k, "seed": seed}
    t0 = time.perf_counter()
    pol = make_policy(policy_id)
    try:
        adv = make_adversary(adv_id, dict(params), seed)
        tr, gr = run_game(adv, pol, max_ops=max_ops)
        row.update(cost=gr.cost, opt=gr.opt, ratio=gr.ratio, ops=len(tr.steps),
                   truncated=tr.truncated, error="")
        row["C"] = pol.observed_distortion() if isinstance(pol, DistortedChaser) else 1.0
    except (ValueError, IllegalOp) as e:
        row.update(error=type(e).__name__)
    if timing:
        row["wall_s"] = time.perf_counter() - t0
    return row


def cmd_bench(args) -> int:
    policies = [p for p in args.policies.split(",") if p]
    advs = [a for a in args.adversaries.split(",") if a]
    for p in policies:
        RunConfig("bench", p)
    for a in advs:
        RunConfig("bench", adversary=a)
    ks = [int(k) for k in args.k.split(",")]
    seeds = RunConfig("bench", seeds=_seeds(args.seeds)).seeds
    tasks = []
    for a in advs:
        for k in ks:
            params = _params(args.params, k, a)
            if a == "random":
                params.setdefault("ops", 200)
            for p in policies:
                for s in seeds:
                    tasks.append((p, a, k, s, tuple(params.items()), args.max_ops, args.timing))
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(args.workers) as ex:
            rows = list(ex.map(_bench_task, tasks))
    else:
        rows = [_bench_task(t) for t in tasks]
    from .engine import summary_csv
    fields = BENCH_FIELDS + (["wall_s"] if args.timing else [])
    text = summary_csv(rows, fields)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_dk_table(args) -> int:
    for row in table(args.kmax):
        print(json.dumps(row))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="setchase", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, adversary_required=False):
        p.add_argument("--policy", default="chaser-2k", help=f"one of {sorted(POLICIES)}")
        p.add_argument("--adversary", required=adversary_required, help=f"one of {list(ADVERSARY_IDS)}")
        p.add_argument("--k", type=int, help="instance width (k for lb-*, width for random)")
        p.add_argument("--params", help="JSON object of generator parameters")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-ops", type=int, default=10**6)
        p.add_argument("--out", type=Path)

    p = sub.add_parser("run", help="play a policy on a generator or a layered instance")
    common(p)
    p.add_argument("--instance", help="layered instance JSON")
    p.add_argument("--audit", action="store_true", help="check invariants after every op")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("gen", help="record a generator's op stream")
    common(p, adversary_required=True)
    p.add_argument("--export-lgt", help="also write the stream as a layered instance")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("verify", help="run invariant campaigns")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--games", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--inject-fault", choices=["distortion"])
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="policy x adversary x seed matrix as CSV")
    p.add_argument("--policies", default="chaser-2k,greedy")
    p.add_argument("--adversaries", default="lb-det")
    p.add_argument("--k", default="2")
    p.add_argument("--seeds", default="0")
    p.add_argument("--params")
    p.add_argument("--max-ops", type=int, default=200_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="add a wall-clock column (not reproducible)")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("dk-table", help="print D_k, x_k and bounds")
    p.add_argument("--kmax", type=int, default=20)
    p.set_defaults(fn=cmd_dk_table)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

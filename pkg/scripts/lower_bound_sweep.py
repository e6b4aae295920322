"""Ratios forced by the deterministic construction on every policy, as CSV on stdout."""

import argparse
import sys

from setchase.adversaries import LB_PRESETS, det_lower_bound
from setchase.engine import summary_csv
from setchase.policies import POLICIES, make_policy


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", default="2,3", help="comma-separated widths with presets (2, 3, 4)")
    ap.add_argument("--policies", default=",".join(sorted(POLICIES)))
    ap.add_argument("--max-ops", type=int, default=1_000_000)
    args = ap.parse_args(argv)
    rows = []
    for k in map(int, args.k.split(",")):
        for pid in args.policies.split(","):
            tr, res, out = det_lower_bound(LB_PRESETS[k], make_policy(pid), max_ops=args.max_ops)
            log = out.log
            rows.append({"instance": f"lb-det-k{k}", "algorithm": pid, "k": k, "cost": res.cost,
                         "opt": res.opt, "ratio": res.ratio, "forced_lb": out.forced,
                         "superphases": len(log.phases) if log else 0,
                         "end": log.end_reason if log else "op-limit", "ops": len(tr.steps)})
            print(f"k={k} {pid:10s} ratio {res.ratio:9.3f}  ops {len(tr.steps)}", file=sys.stderr)
    sys.stdout.write(summary_csv(rows, list(rows[0])))


if __name__ == "__main__":
    main()

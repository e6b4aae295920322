"""Doubling-search instance as a width-2 layered graph, played through the reduction."""

import argparse

from setchase.lgt import binarize, cow_path, offline_opt, reduce_and_run
from setchase.policies import POLICIES, make_policy


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--turns", type=int, default=16)
    ap.add_argument("--base", type=float, default=2.0)
    args = ap.parse_args(argv)
    inst = binarize(cow_path(args.turns, args.base))
    opt = offline_opt(inst)
    for pid in sorted(POLICIES):
        r = reduce_and_run(inst, make_policy(pid))
        print(f"{pid:10s} cost {r.cost:12.3f}  walk {r.route_cost:12.3f}  ratio {r.cost / opt:.3f}")


if __name__ == "__main__":
    main()

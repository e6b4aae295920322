"""Monte-Carlo check of ALG >= 2^{k-1} (ADV - C_k) for several sub-instance counts."""

import argparse

from setchase.adversaries import AdaptiveParams, adaptive_adversary
from setchase.policies import make_policy


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--subinstances", default="10,25,50,100")
    ap.add_argument("--policy", default="chaser-2k")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    print("n,mean_alg,mean_adv,rhs,bootstrap_frac,chi2_p")
    for n in map(int, args.subinstances.split(",")):
        p = AdaptiveParams(k=args.k, num_subinstances=n, trials=args.trials, rng_seed=args.seed)
        r = adaptive_adversary(p, lambda: make_policy(args.policy))
        rhs = 2 ** (args.k - 1) * (r.mean_adv - r.C_k)
        print(f"{n},{r.mean_alg!r},{r.mean_adv!r},{rhs!r},{r.bootstrap_frac!r},{r.chi_square_p!r}")


if __name__ == "__main__":
    main()

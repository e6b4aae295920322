"""Run the audited random campaigns with a chosen size and seed."""

import argparse
import sys

from setchase import campaign


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--games", type=int, default=2000)
    ap.add_argument("--width", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    results = [
        campaign.chaser_campaign(args.games, args.width, args.seed, workers=args.workers),
        campaign.d3_campaign(args.games, args.seed, workers=args.workers),
        campaign.lgt_campaign(min(args.games, 1000), args.seed),
    ]
    for r in results:
        print(r.line())
        for f in r.failures[:10]:
            print("   ", f)
    sys.exit(0 if all(r.ok for r in results) else 1)


if __name__ == "__main__":
    main()

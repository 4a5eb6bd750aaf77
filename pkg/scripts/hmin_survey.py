"""Compare the closed-form H_min against the unit max-flow oracle on random tori.

The oracle is what the library returns; this script only measures how often
the closed form would have disagreed.
"""

import argparse
import collections
import logging
import random

from qnetcap.modular import h_min_formula, isolation_oracle, torus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.getLogger("qnetcap").setLevel(logging.ERROR)
    rng = random.Random(args.seed)
    print(f"{'torus':>6} {'targets':>7} {'checked':>7} {'disagree':>8} {'max gap':>7}")
    for side in (3, 4, 5, 6, 8):
        net = torus(side, side)
        for t in range(1, 7):
            stats = collections.Counter()
            gap = 0
            for _ in range(args.samples):
                targets = rng.sample(net.nodes, t)
                oracle = isolation_oracle(net, targets)
                if oracle is None:
                    continue
                f = h_min_formula(4, targets, net)
                stats["checked"] += 1
                if f != oracle:
                    stats["disagree"] += 1
                    gap = max(gap, abs(f - oracle))
            print(f"{side}x{side:<4} {t:>7} {stats['checked']:>7} {stats['disagree']:>8} {gap:>7}")


if __name__ == "__main__":
    main()

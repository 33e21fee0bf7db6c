"""Error-bound sweep: epsilon(delta) / epsilon(delta/2) for several radii and fields.

    python3 scripts/theorem_sweep.py --trials 100
"""

import argparse

import numpy as np

from rfspec.cli import theorem_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("field\tradius_m\tmedian_ratio\tq10\tq90\tsatisfied")
    for field, radii in [("quadratic", [0.1]), ("freespace", [0.005, 0.01, 0.02, 0.05, 0.1])]:
        for radius in radii:
            reports = theorem_sweep(field, args.trials, args.seed, radius)
            ratios = np.array([a.epsilon / b.epsilon for a, b in reports])
            sats = [r.satisfied for pair in reports for r in pair if r.satisfied is not None]
            sat = f"{np.mean(sats):.3f}" if sats else "na"
            q10, q50, q90 = np.percentile(ratios, [10, 50, 90])
            print(f"{field}\t{radius:g}\t{q50:.4f}\t{q10:.4f}\t{q90:.4f}\t{sat}", flush=True)


if __name__ == "__main__":
    main()

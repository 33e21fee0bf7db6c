"""Reflection-point proximity (pairs of nearby transmitters) and learned KNN-DL weight spread.

    python3 scripts/observations.py --pairs 500
"""

import argparse

import numpy as np

from rfspec.datastore import SplitSpec, split
from rfspec.interp import NeighborSet
from rfspec.knndl import train, weight_stats
from rfspec.raytrace import box_scene, order1_distances, sample_transmitters, simulate_spectrum, transmitter_pairs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=500)
    ap.add_argument("--count", type=int, default=300)
    ap.add_argument("--targets", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    scene = box_scene(seed=args.seed)

    print("separation_m\tn_distances\tfraction_below_0.1m\tmedian_m\tmax_m")
    for sep in (0.01, 0.05, 0.1, 0.2, 0.5):
        pairs = transmitter_pairs(scene, args.pairs, sep, np.random.default_rng(args.seed))
        d = np.array(order1_distances(scene, pairs))
        print(f"{sep:g}\t{d.size}\t{np.mean(d < 0.1):.3f}\t{np.median(d):.4f}\t{d.max():.4f}", flush=True)

    P = sample_transmitters(scene, args.count, np.random.default_rng(args.seed))
    S = np.stack([simulate_spectrum(scene, p, 2) for p in P])
    tr, te = split(len(P), SplitSpec(0.8, args.seed))
    Ws = [train(NeighborSet.select(P[tr], S[tr], P[i], 6), S[i])[0] for i in te[:args.targets]]
    st = weight_stats(Ws)
    print("\nneighbour\tmean_w\tstd_w")
    for k, (m, s) in enumerate(zip(st.mean, st.std)):
        print(f"{k}\t{m:.4f}\t{s:.4f}")
    print(f"normalised range\t{st.min:.4f}\t{st.max:.4f}")


if __name__ == "__main__":
    main()

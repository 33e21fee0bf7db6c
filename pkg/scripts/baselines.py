"""KNN, barycentric and KNN-DL mean PSNR/SSIM on seeded box-scene datasets.

    python3 scripts/baselines.py --count 300 --seeds 0 1 2
"""

import argparse

import numpy as np

from rfspec.datastore import SpectrumDataset, SplitSpec
from rfspec.cli import evaluate
from rfspec.knndl import TrainConfig
from rfspec.raytrace import box_scene, sample_transmitters, simulate_spectrum
from rfspec.scenefile import scene_hash


def dataset(count, seed, max_order):
    scene = box_scene(seed=seed)
    P = sample_transmitters(scene, count, np.random.default_rng(seed))
    S = np.stack([simulate_spectrum(scene, p, max_order) for p in P])
    return SpectrumDataset(P, S, scene.rf.frequency_hz, scene_hash(scene))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=300)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1])
    ap.add_argument("--L", type=int, default=6)
    ap.add_argument("--max-order", type=int, default=2)
    ap.add_argument("--skip-knndl", action="store_true")
    args = ap.parse_args()
    methods = ["knn", "barycentric"] + ([] if args.skip_knndl else ["knndl"])
    print("seed\tmethod\tmean_psnr_db\tmean_ssim\tmean_mse")
    for seed in args.seeds:
        ds = dataset(args.count, seed, args.max_order)
        for method in methods:
            _, res = evaluate(ds, method, args.L, SplitSpec(0.8, 0), TrainConfig(seed=seed))
            reps = [r for r, _ in res]
            psnr = np.array([r.psnr_db for r in reps])
            print(f"{seed}\t{method}\t{psnr[np.isfinite(psnr)].mean():.3f}\t"
                  f"{np.mean([r.ssim for r in reps]):.4f}\t{np.mean([r.mse for r in reps]):.3e}", flush=True)


if __name__ == "__main__":
    main()

"""``rfspec`` command line: dataset generation and the verification experiments.

Every command writes its main output to ``--out`` and a JSON run manifest
next to it (``<out>.manifest.json``); ``rfspec replay <manifest>`` reruns
the recorded command line.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric/domain error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .datastore import (SpectrumDataset, SplitSpec, load_dataset, render_pgm, save_dataset, split,
                        write_atomic)
from .errors import (DatasetFormatError, DegenerateGeometryError, DomainError, ModeError,
                     PlacementError, SceneError, ShapeError, SizeError)
from .interp import (NeighborSet, barycentric_weights, constant_field, affine_field,
                     freespace_field, interpolate_spectrum, knn_average, quadratic_field, scaling_trial)
from .knndl import TrainConfig, predict, train
from .metrics import compare
from .raytrace import (order1_distances, sample_transmitters, simulate_spectrum, transmitter_pairs)
from .scenefile import load_scene, scene_hash

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

METHODS = ("knn", "barycentric", "knndl")
FIELDS = ("quadratic", "freespace", "constant", "affine")


def fmt(x) -> str:
    """Nine significant digits; infinities and NaN spelled out."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if x is None:
        return "na"
    if isinstance(x, bool):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def tsv(rows) -> str:
    return "".join("\t".join(fmt(v) if not isinstance(v, str) else v for v in row) + "\n" for row in rows)


def _pool_map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- commands ---------------------------------------------------------------

def cmd_generate(args):
    scene = load_scene(args.scene)
    seed = scene.seed if args.seed is None else args.seed
    if args.tx_list:
        tx = np.loadtxt(args.tx_list, dtype=float, ndmin=2)
        if tx.shape[1] != 3:
            raise DatasetFormatError("transmitter list must have three columns")
    else:
        if args.count is None or args.count < 1:
            raise SizeError("--count must be at least 1 (or give --tx-list)")
        tx = sample_transmitters(scene, args.count, np.random.default_rng(seed), args.clearance)

    def one(i):
        rng = None if args.snr_db is None else np.random.default_rng([seed, i])
        return simulate_spectrum(scene, tx[i], args.max_order, args.snr_db, rng)

    spectra = np.stack(_pool_map(one, range(len(tx)), args.threads))
    ds = SpectrumDataset(tx, spectra.astype(np.float32), scene.rf.frequency_hz, scene_hash(scene))
    save_dataset(ds, args.out)
    return {"seeds": {"placement": seed}, "inputs": [args.scene] + ([args.tx_list] if args.tx_list else []),
            "records": len(ds)}


def cmd_split(args):
    ds = load_dataset(args.dataset)
    train_idx, test_idx = split(ds, SplitSpec(args.train_fraction, args.seed))
    rows = [("index", "set")] + [(int(i), "train") for i in train_idx] + [(int(i), "test") for i in test_idx]
    write_atomic(args.out, tsv(rows).encode())
    return {"seeds": {"split": args.seed}, "inputs": [args.dataset]}


def evaluate(ds: SpectrumDataset, method: str, L: int, spec: SplitSpec, cfg: TrainConfig,
             threads: int = 1):
    """Per-target metric rows and knndl loss traces for one baseline."""
    train_idx, test_idx = split(ds, spec)
    if L > len(train_idx):
        raise SizeError(f"L={L} exceeds the {len(train_idx)} training transmitters")
    P_train = ds.positions[train_idx]
    S_train = ds.spectra[train_idx]

    def one(i):
        truth = ds.spectra[i].astype(float)
        ns = NeighborSet.select(P_train, S_train, ds.positions[i], L)
        trace = None
        if method == "knn":
            pred = knn_average(ns)
        elif method == "barycentric":
            pred = interpolate_spectrum(ns, barycentric_weights(ns.positions, ns.target))
        else:
            W, trace = train(ns, truth, cfg)
            pred = predict(W, ns)
        return compare(pred, truth), trace

    results = _pool_map(one, test_idx, threads)
    return test_idx, results


def cmd_eval(args):
    ds = load_dataset(args.dataset)
    cfg = TrainConfig(args.iterations, args.lr, args.seed)
    test_idx, results = evaluate(ds, args.method, args.L, SplitSpec(args.train_fraction, args.seed),
                                 cfg, args.threads)
    rows = [("target_index", "x", "y", "z", "mse", "psnr_db", "ssim")]
    for i, (rep, _) in zip(test_idx, results):
        x, y, z = ds.positions[i]
        rows.append((int(i), x, y, z, rep.mse, rep.psnr_db, rep.ssim))
    mses = np.array([r.mse for r, _ in results])
    psnrs = np.array([r.psnr_db for r, _ in results])
    ssims = np.array([r.ssim for r, _ in results])
    finite = psnrs[np.isfinite(psnrs)]
    summary = [
        ("statistic", "value"),
        ("method", args.method),
        ("L", args.L),
        ("n_targets", len(results)),
        ("mean_mse", float(mses.mean())),
        ("mean_psnr_db", float(finite.mean()) if finite.size else math.inf),
        ("n_psnr_inf", int(np.sum(np.isinf(psnrs)))),
        ("mean_ssim", float(ssims.mean())),
        ("lpips", "unsupported"),
    ]
    write_atomic(args.out, (tsv(rows) + "\n" + tsv(summary)).encode())
    outputs = [args.out]
    if args.method == "knndl":
        trace_path = args.out + ".traces.tsv"
        trows = [("target_index",) + tuple(f"iter_{k}" for k in range(args.iterations + 1))]
        trows += [(int(i),) + tuple(tr) for i, (_, tr) in zip(test_idx, results)]
        write_atomic(trace_path, tsv(trows).encode())
        outputs.append(trace_path)
    return {"seeds": {"split": args.seed, "train": args.seed}, "inputs": [args.dataset],
            "outputs": outputs}


def _field(name, rng):
    if name == "quadratic":
        return quadratic_field(rng)
    if name == "constant":
        return constant_field(1.0)
    if name == "affine":
        return affine_field(rng)
    return freespace_field()


def _theorem_target(name, rng):
    if name == "freespace":
        return np.array([rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0)])
    return rng.uniform(-1.0, 1.0, size=3)


def theorem_sweep(field: str, trials: int, seed: int, radius: float | None = None,
                  estimate_K: bool | None = None):
    rng = np.random.default_rng(seed)
    oracle = _field(field, rng)
    if radius is None:
        radius = 0.02 if field == "freespace" else 0.1
    if estimate_K is None:
        estimate_K = field != "freespace"
    out = []
    for _ in range(trials):
        target = _theorem_target(field, rng)
        out.append(scaling_trial(oracle, target, radius, rng, estimate_K=estimate_K))
    return out


def cmd_theorem(args):
    if args.trials < 1:
        raise SizeError("--trials must be at least 1")
    reports = theorem_sweep(args.field, args.trials, args.seed, args.radius,
                            True if args.estimate_k else None)
    rows = [("trial", "method", "delta", "epsilon", "K", "bound", "satisfied",
             "delta_half", "epsilon_half", "K_half", "satisfied_half", "ratio")]
    ratios, sats = [], []
    for t, (a, b) in enumerate(reports):
        ratio = a.epsilon / b.epsilon if b.epsilon > 0 else math.nan
        ratios.append(ratio)
        sats += [s for s in (a.satisfied, b.satisfied) if s is not None]
        rows.append((t, a.method, a.delta, a.epsilon, a.K, a.bound, a.satisfied,
                     b.delta, b.epsilon, b.K, b.satisfied, ratio))
    r = np.array(ratios)
    finite = r[np.isfinite(r)]
    eps = np.array([x.epsilon for pair in reports for x in pair])
    summary = [
        ("statistic", "value"),
        ("field", args.field),
        ("trials", len(reports)),
        ("checked_reports", len(sats)),
        ("satisfaction_rate", float(np.mean(sats)) if sats else math.nan),
        ("max_epsilon", float(eps.max())),
        ("ratio_median", float(np.median(finite)) if finite.size else math.nan),
        ("ratio_q25", float(np.percentile(finite, 25)) if finite.size else math.nan),
        ("ratio_q75", float(np.percentile(finite, 75)) if finite.size else math.nan),
    ]
    write_atomic(args.out, (tsv(rows) + "\n" + tsv(summary)).encode())
    return {"seeds": {"theorem": args.seed}}


OBS1_BINS = np.round(np.arange(0.0, 0.2 + 1e-12, 0.02), 10)


def cmd_obs1(args):
    scene = load_scene(args.scene)
    if args.pairs < 1:
        raise SizeError("--pairs must be at least 1")
    seed = scene.seed if args.seed is None else args.seed
    pairs = transmitter_pairs(scene, args.pairs, args.separation, np.random.default_rng(seed))
    dist = np.array(order1_distances(scene, pairs))
    lines = []
    if dist.size == 0:
        lines.append("# notice: no first-order reflection paths in this scene\n")
    edges = list(OBS1_BINS) + [math.inf]
    rows = [("bin_lo", "bin_hi", "count")]
    for lo, hi in zip(edges[:-1], edges[1:]):
        rows.append((lo, hi, int(np.sum((dist >= lo) & (dist < hi)))))
    summary = [
        ("statistic", "value"),
        ("pairs", args.pairs),
        ("separation_m", args.separation),
        ("n_distances", int(dist.size)),
        ("fraction_below_0.1m", float(np.mean(dist < 0.1)) if dist.size else math.nan),
        ("max_distance_m", float(dist.max()) if dist.size else math.nan),
    ]
    write_atomic(args.out, ("".join(lines) + tsv(rows) + "\n" + tsv(summary)).encode())
    return {"seeds": {"pairs": seed}, "inputs": [args.scene]}


def cmd_render(args):
    ds = load_dataset(args.dataset)
    if not 0 <= args.index < len(ds):
        raise IndexError(f"record {args.index} out of range for {len(ds)} records")
    write_atomic(args.out, render_pgm(ds.spectra[args.index], args.gamma))
    return {"inputs": [args.dataset]}


def cmd_replay(args):
    manifest = json.loads(Path(args.manifest).read_text())
    return main(manifest["argv"], _nested=True)


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default: scene seed or 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--out", required=True, help="output path")

    p = argparse.ArgumentParser(prog="rfspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rfspec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="simulate a spectrum dataset")
    g.add_argument("--scene", required=True)
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--count", type=int)
    src.add_argument("--tx-list", help="text file, one 'x y z' transmitter per line")
    g.add_argument("--max-order", type=int, default=2)
    g.add_argument("--snr-db", type=float, default=None)
    g.add_argument("--clearance", type=float, default=0.1)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("split", parents=[common], help="write a train/test split")
    s.add_argument("--dataset", required=True)
    s.add_argument("--train-fraction", type=float, default=0.8)
    s.set_defaults(func=cmd_split)

    e = sub.add_parser("eval", parents=[common], help="evaluate a baseline predictor")
    e.add_argument("--dataset", required=True)
    e.add_argument("--method", choices=METHODS, required=True)
    e.add_argument("--L", type=int, default=6)
    e.add_argument("--train-fraction", type=float, default=0.8)
    e.add_argument("--iterations", type=int, default=200)
    e.add_argument("--lr", type=float, default=0.05)
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("theorem", parents=[common], help="interpolation error-bound sweep")
    t.add_argument("--field", choices=FIELDS, required=True)
    t.add_argument("--trials", type=int, default=100)
    t.add_argument("--radius", type=float, default=None)
    t.add_argument("--estimate-k", action="store_true", help="also estimate K for the freespace field")
    t.set_defaults(func=cmd_theorem)

    o = sub.add_parser("obs1", parents=[common], help="reflection-point proximity of close transmitter pairs")
    o.add_argument("--scene", required=True)
    o.add_argument("--pairs", type=int, default=500)
    o.add_argument("--separation", type=float, default=0.05)
    o.set_defaults(func=cmd_obs1)

    r = sub.add_parser("render", parents=[common], help="export one spectrum as a 16-bit PGM")
    r.add_argument("--dataset", required=True)
    r.add_argument("--index", type=int, required=True)
    r.add_argument("--gamma", type=float, default=1.0)
    r.set_defaults(func=cmd_render)

    rp = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    rp.add_argument("manifest")
    rp.set_defaults(func=cmd_replay)
    return p


_SEEDED_DEFAULT_ZERO = {"split", "eval", "theorem"}


def main(argv=None, _nested=False) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command in _SEEDED_DEFAULT_ZERO and args.seed is None:
        args.seed = 0
    start = time.perf_counter()
    try:
        info = args.func(args)
    except (SizeError, IndexError, ValueError) as exc:
        if isinstance(exc, (DomainError, ShapeError, ModeError, DegenerateGeometryError)):
            print(f"rfspec: numeric error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"rfspec: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetFormatError, SceneError, PlacementError, OSError) as exc:
        print(f"rfspec: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.command == "replay":
        return info
    resolved = list(argv)
    if "--seed" not in resolved and info.get("seeds"):
        resolved += ["--seed", str(next(iter(info["seeds"].values())))]
    manifest = {
        "command": args.command,
        "argv": resolved,
        "config": {k: v for k, v in vars(args).items() if k != "func"},
        "seeds": info.get("seeds", {}),
        "inputs": info.get("inputs", []),
        "outputs": info.get("outputs", [args.out]),
        "tool_version": __version__,
        "duration_s": time.perf_counter() - start,
    }
    write_atomic(args.out + ".manifest.json", (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    return 0


if __name__ == "__main__":
    sys.exit(main())

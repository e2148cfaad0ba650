#!/usr/bin/env python3
"""Ensemble-size sweep on small phantoms (the variance-reduction experiment).

Trains size x repeats fresh models per ensemble size and prints the per-size
mean and standard deviation of every metric across repeats.
"""

import argparse
import time

from wmhseg.net.training import TrainConfig
from wmhseg.net.unet import build_unet
from wmhseg.phantom import PhantomSpec, phantom_generate
from wmhseg.sweep import METRICS, ensemble_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=12, help="phantom cases")
    parser.add_argument("--sizes", default="1,3,5", help="comma-separated ensemble sizes")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--base-width", type=int, default=8)
    parser.add_argument("--epochs", type=int, default=12)
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--lr", type=float, default=4e-4)
    parser.add_argument("--stop-loss", type=float, default=-0.85)
    parser.add_argument("--phantom-seed", type=int, default=11)
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default=None, help="optional CSV output path")
    args = parser.parse_args()

    start = time.monotonic()
    spec_p = PhantomSpec(dims=(32, 32, 8), lesion_count_range=(2, 4),
                         lesion_radius_range=(1.5, 2.5), seed=args.phantom_seed)
    cases = phantom_generate(spec_p, args.count)
    spec = build_unet(input_channels=2, base_width=args.base_width)
    cfg = TrainConfig(batch_size=args.batch, learning_rate=args.lr,
                      epochs=args.epochs, seed=0, stop_loss=args.stop_loss)
    sizes = [int(s) for s in args.sizes.split(",")]
    result = ensemble_sweep(cases, sizes, args.repeats, spec, cfg,
                            seed=args.seed, workers=args.workers)

    print("metric," + ",".join(f"size{s}_mean,size{s}_std" for s in sizes))
    for metric in METRICS:
        cells = []
        for s in sizes:
            mean, std = result.summary[metric][s]
            cells += [f"{mean:.4f}", f"{std:.4f}"]
        print(f"{metric}," + ",".join(cells))
    if args.out:
        result.to_csv(args.out)
        print(f"wrote {args.out}")
    print(f"total time {(time.monotonic() - start) / 60:.1f} min")


if __name__ == "__main__":
    main()

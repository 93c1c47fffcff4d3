"""How often a perfectly calibrated predictor stays within n_sigma standard errors.

Compares judging every centred window against judging only disjoint windows.

    python scripts/calibration_experiment.py --seeds 400
"""

import argparse
import json
import math

import numpy as np

from projhuber.harness import calibration_curve, window_bounds


def zscores(seed, n, window):
    rng = np.random.default_rng(seed)
    pv = np.exp(rng.uniform(math.log(0.1), math.log(10.0), n))
    se = rng.normal(size=n) ** 2 * pv
    curve = calibration_curve(pv, se, window)
    order = np.lexsort((se, pv))
    lo, hi = window_bounds(n, window)
    c2 = np.concatenate([[0.0], np.cumsum(2.0 * pv[order] ** 2)])
    sem = np.sqrt(c2[hi] - c2[lo]) / (hi - lo)
    return (curve.empirical - curve.predicted) / sem


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=400)
    parser.add_argument("--n", type=int, default=10_000)
    parser.add_argument("--window", type=int, default=200)
    parser.add_argument("--n-sigma", type=float, default=3.0)
    args = parser.parse_args()

    tiles = np.arange(args.window // 2, args.n, args.window)
    all_ok = disjoint_ok = 0
    for seed in range(args.seeds):
        z = np.abs(zscores(seed, args.n, args.window))
        all_ok += bool(z.max() <= args.n_sigma)
        disjoint_ok += bool(z[tiles].max() <= args.n_sigma)
    print(json.dumps({"seeds": args.seeds, "pass_rate_all_positions": all_ok / args.seeds, "pass_rate_disjoint": disjoint_ok / args.seeds}))


if __name__ == "__main__":
    main()

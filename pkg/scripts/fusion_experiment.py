"""Fused localization error versus number of views on simulated rigs.

    python scripts/fusion_experiment.py --trials 200 --max-views 6
"""

import argparse
import json

import numpy as np

from projhuber.fusion import fuse
from projhuber.harness import ScenarioConfig, simulate_rig


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--max-views", type=int, default=6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    for k in range(1, args.max_views + 1):
        errors = []
        for trial in range(args.trials):
            cfg = ScenarioConfig(n_views=args.max_views, seed=args.seed + trial)
            views = simulate_rig(cfg)[:k]
            errors.append(np.linalg.norm(fuse(views).v_star - np.asarray(cfg.truth)))
        errors = np.array(errors) * 1000.0
        print(json.dumps({"views": k, "median_mm": float(np.median(errors)), "p90_mm": float(np.percentile(errors, 90))}))


if __name__ == "__main__":
    main()

"""Spread of direct-fit errors over seeds, used to check the recovery tolerances.

    python scripts/pilot_fit_tolerance.py --seeds 10 --n 50000
"""

import argparse
import json

import numpy as np

from projhuber.harness import fit_params
from projhuber.verify import recovery_observations


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--n", type=int, default=50_000)
    parser.add_argument("--first-seed", type=int, default=100)
    args = parser.parse_args()

    rows = []
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        res = fit_params(recovery_observations(args.n, seed))
        p = res.params
        rows.append(
            {
                "seed": seed,
                "nu_z": abs(p.nu_z - 1.0),
                "a": abs(p.a - 5.0) / 5.0,
                "B": float(np.abs(p.B - 3.0 * np.eye(2)).max() / 3.0),
                "converged": res.converged,
            }
        )
        print(json.dumps(rows[-1]))
    summary = {k: {"max": max(r[k] for r in rows), "mean": float(np.mean([r[k] for r in rows]))} for k in ("nu_z", "a", "B")}
    print(json.dumps({"summary": summary, "tolerances": {"nu_z": 0.02, "a": 0.15, "B": 0.10}}))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Cost-vs-radii experiment on the 10-state benchmark (Fig-1a style).

Writes the standard runs.csv / summary.json pair through the CLI so the
outputs match the public file contracts exactly.
"""

import argparse
import sys
from pathlib import Path

import yaml

from drce.cli import main as drce_main


def build_config(out_dir: Path, runs: int, seed: int, lam: float,
                 theta_w: float, theta_v_grid: list[float]) -> dict:
    return {
        "version": 1,
        "system": {"builtin": "paper10", "horizon": 20},
        "nominal": {"source": "from_true",
                    "n_samples": {"w": 15, "v": 15, "x0": 15},
                    "seed": 2024},
        "true_distributions": {
            "w": {"kind": "uquadratic", "a": 0.0, "b": 2.0},
            "v": {"kind": "uquadratic", "a": -0.5, "b": 2.5},
            "x0": {"kind": "uquadratic", "a": 0.8, "b": 1.2},
        },
        "robustness": {
            "theta_w_grid": [theta_w],
            "theta_v_grid": theta_v_grid,
            "theta_x0": 2.0,
            "lambda": {"mode": "fixed", "value": lam},
        },
        "simulation": {"n_runs": runs, "base_seed": seed,
                       "methods": ["wdrce", "wdrc", "lqg"]},
        "solver": {"tol": 1e-3},
        "output_dir": str(out_dir),
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/cost_grid")
    ap.add_argument("--runs", type=int, default=500)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--lam", type=float, default=50.0,
                    help="penalty parameter (bound-minimizing value for theta_w=0.1)")
    ap.add_argument("--theta-w", type=float, default=0.1)
    ap.add_argument("--theta-v-grid", nargs="+", type=float,
                    default=[0.25, 0.5, 1.0, 2.0, 4.0, 8.0])
    args = ap.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_path = out_dir / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(build_config(
        out_dir, args.runs, args.seed, args.lam, args.theta_w, args.theta_v_grid)))

    code = drce_main(["offline", "--config", str(cfg_path)])
    if code != 0:
        return code
    return drce_main(["simulate", "--config", str(cfg_path)])


if __name__ == "__main__":
    sys.exit(main())

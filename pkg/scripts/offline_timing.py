#!/usr/bin/env python3
"""Offline synthesis wall time vs horizon (Fig-1b style).

Repeats the backward pass + worst-case SDP chain for each horizon under
zero-mean Gaussian nominals and writes a timing-sweep JSON that the plotting
tool's time_scaling figure consumes.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from drce.model import NominalModel, RobustnessConfig
from drce.riccati import backward_pass
from drce.systems import builtin_system
from drce.worstcase import forward_pass


def time_horizon(T: int, repeats: int, tol: float) -> list[float]:
    system = builtin_system("paper10", T=T)
    n = system.n_x
    nominal = NominalModel.stationary(
        T, np.zeros(n), 0.1 * np.eye(n), np.zeros(n), 1.5 * np.eye(n),
        np.zeros(n), 0.1 * np.eye(n))
    cfg = RobustnessConfig(theta_w=1.0, theta_v=1.0, theta_x0=1.0, lambda_=10.0)
    out = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        rc = backward_pass(system, nominal, cfg.lambda_)
        forward_pass(rc, nominal, cfg, system, tol=tol)
        out.append(time.perf_counter() - t0)
    return out


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/timing/timing_sweep.json")
    ap.add_argument("--horizons", nargs="+", type=int, default=[10, 20, 40])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--tol", type=float, default=1e-3)
    args = ap.parse_args()

    entries = []
    for T in args.horizons:
        times = time_horizon(T, args.repeats, args.tol)
        entries.append({"T": T, "times_s": times})
        print(f"T={T}: mean {np.mean(times):.2f}s over {args.repeats} runs")

    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump({"format": "drce-timing-sweep", "version": 1,
                   "tol": args.tol, "entries": entries}, f, indent=1, sort_keys=True)
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

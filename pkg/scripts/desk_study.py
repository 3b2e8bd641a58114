#!/usr/bin/env python3
"""Desk-scale comparison of the first-order detectors.

Calibrates the four first-order detectors of each environment at K_S = 2N and
4N, then prints Pd against SINR side by side. Defaults match the acceptance
settings (N = K_P = 8, r = 2, pfa = 1e-2, 1e4 calibration and 1e3 Pd trials).
"""

import argparse

import numpy as np

from adaptive_subspace import montecarlo as mc
from adaptive_subspace.scenario import ScenarioConfig


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--pfa", type=float, default=1e-2)
    p.add_argument("--calib-trials", type=int, default=10_000)
    p.add_argument("--pd-trials", type=int, default=1000)
    p.add_argument("--sinr", type=float, nargs=3, default=(8.0, 26.0, 2.0),
                   metavar=("START", "STOP", "STEP"))
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)

    start, stop, step = args.sinr
    grid = list(np.arange(start, stop + step / 2, step))
    for env in ("HE", "PHE"):
        names = [f"FO-KS-{env}", f"FO-US-{env}", f"EP-FO-KS-{env}", f"EP-FO-US-{env}"]
        for ratio in (2, 4):
            cfg = ScenarioConfig(N=args.N, K_P=args.N, K_S=ratio * args.N, r=2, env=env)
            rows = mc.calibrate_thresholds(names, cfg, args.pfa, args.calib_trials,
                                           args.seed, args.workers)
            curves = mc.pd_curves(names, cfg, rows, grid, args.pd_trials, args.seed, args.workers)
            print(f"\n{env}, K_S = {cfg.K_S} (scenario {cfg.digest()})")
            print("sinr_db " + " ".join(f"{n:>12}" for n in names))
            for k, s in enumerate(grid):
                print(f"{s:7.1f} " + " ".join(f"{c.pd[k]:12.3f}" for c in curves))


if __name__ == "__main__":
    main()

"""Bias of the minimum-contrast estimator over simulated M1 replicates.

Usage: python scripts/recovery_m1.py --nrep 100 --c 0.5 --R 1.25 --out recovery.json
"""
import argparse
import json
import time
from dataclasses import replace

import numpy as np

from mincontrast.contrast import ContrastConfig
from mincontrast.geometry import RectWindow
from mincontrast.inference import replicate_fits
from mincontrast.lgcp import MODELS, THETA_NAMES, rho


def recovery(model="M1", b=-1, mu=2.0, c=0.5, R=1.25, nrep=100, seed=2024, workers=1):
    truth = replace(MODELS[model], b=b, mu1=mu, mu2=mu)
    thetas, n_failed = replicate_fits(truth, ContrastConfig(c=c, R=R), nrep, seed,
                                      RectWindow(-5, 5, -5, 5), workers=workers)
    rhos = np.array([rho(truth.with_theta(t)) for t in thetas])
    est = np.column_stack([thetas, rhos])
    target = np.append(truth.theta, rho(truth))
    return {"names": list(THETA_NAMES) + ["rho"], "truth": target.tolist(),
            "estimates": est.tolist(), "n_failed": n_failed,
            "median_bias": (np.median(est, axis=0) - target).tolist(),
            "mean_bias": (est.mean(axis=0) - target).tolist(),
            "sd": est.std(axis=0, ddof=1).tolist()}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="M1")
    ap.add_argument("--b", type=int, default=-1)
    ap.add_argument("--mu", type=float, default=2.0)
    ap.add_argument("--c", type=float, default=0.5)
    ap.add_argument("--R", type=float, default=1.25)
    ap.add_argument("--nrep", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    t0 = time.perf_counter()
    out = recovery(args.model, args.b, args.mu, args.c, args.R, args.nrep, args.seed, args.threads)
    print(f"{args.nrep} replicates, {out['n_failed']} failed, {time.perf_counter() - t0:.0f} s")
    print(f"{'param':8s} {'truth':>8s} {'med.bias':>9s} {'mean.bias':>9s} {'sd':>7s}")
    for k, name in enumerate(out["names"]):
        print(f"{name:8s} {out['truth'][k]:8.3f} {out['median_bias'][k]:9.3f} "
              f"{out['mean_bias'][k]:9.3f} {out['sd'][k]:7.3f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(out, fh, indent=1)


if __name__ == "__main__":
    main()

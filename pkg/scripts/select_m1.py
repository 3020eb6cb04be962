"""Control-parameter selection for model M1 at the true parameters.

Usage: python scripts/select_m1.py --seed 1 --nsim 600 --b -1 --out select_m1.json
"""
import argparse
import json

import numpy as np

from mincontrast.contrast import ContrastConfig
from mincontrast.geometry import RectWindow
from mincontrast.inference import select_cr
from mincontrast.lgcp import MODELS

C_GRID = [0.1, 0.2, 0.3, 0.4, 0.5]
R_GRID = list(np.round(np.arange(0.5, 5.0 + 1e-9, 0.25), 2))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="M1")
    ap.add_argument("--b", type=int, default=-1)
    ap.add_argument("--mu", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--nsim", type=int, default=600)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    from dataclasses import replace
    params = replace(MODELS[args.model], b=args.b, mu1=args.mu, mu2=args.mu)
    res = select_cr(params, C_GRID, R_GRID, args.nsim, args.seed, ContrastConfig(),
                    window=RectWindow(-5, 5, -5, 5), workers=args.threads)
    print(f"optimum (c, R) = ({res.c_opt}, {res.R_opt}), "
          f"log det = {np.nanmin(res.logdet):.3f}, {res.seconds:.0f} s")
    with np.printoptions(precision=2, linewidth=200):
        print(res.logdet)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(res.to_dict(), fh, indent=1)


if __name__ == "__main__":
    main()

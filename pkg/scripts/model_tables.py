"""Cross-correlations of the four simulation models and of the fitted terrorism model.

Usage: python scripts/model_tables.py
"""
from dataclasses import replace

from mincontrast.inference import correlation_table
from mincontrast.lgcp import MODELS, LgcpParams, rho

FITTED = LgcpParams(1.27, 66.38, 1.93, 12.91, 1.33, 360.42, b=-1)
DISTANCES = [50.0, 100.0, 250.0, 420.0]


def main():
    print("model  sigma1  phi1 sigma2  phi2 sigma3  phi3    rho(b=+1)")
    for name, p in MODELS.items():
        print(f"{name:5s} " + " ".join(f"{v:6.2f}" for v in p.theta) + f"    {rho(replace(p, b=1)):+.4f}")
    print()
    print(f"fitted model: rho = {rho(FITTED):+.4f}")
    t = correlation_table(FITTED, DISTANCES)
    print(f"{'r':>8s}" + "".join(f"{d:>8.0f}" for d in DISTANCES))
    for key in ("corr11", "corr22", "corr12"):
        print(f"{key:>8s}" + "".join(f"{v:8.3f}" for v in t[key]))


if __name__ == "__main__":
    main()

"""Median lambda_max and MC per grid point from sweep.csv, plus the
first radius where the median exponent turns positive.

    python sweep_summary.py out/sweep.csv
"""
import sys

import pandas as pd

df = pd.read_csv(sys.argv[1], comment="#")
med = (
    df.groupby(["rho", "input_scale", "leak"])[["lambda_max", "mc_total", "d_ky", "h_ks"]]
    .median()
    .reset_index()
)
print(med.to_string(index=False))

for (scale, leak), g in med.groupby(["input_scale", "leak"]):
    g = g.sort_values("rho")
    pos = g[g["lambda_max"] > 0]
    rho_star = pos["rho"].iloc[0] if len(pos) else None
    mono = g["lambda_max"].is_monotonic_increasing
    print(f"input_scale={scale} leak={leak}: nondecreasing={mono} first positive rho={rho_star}")

"""Error-vs-size curves from approx.csv.

    python approx_curves.py out/approx.csv approx.png
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv(sys.argv[1], comment="#")
png = sys.argv[2] if len(sys.argv) > 2 else "approx.png"

fig, ax = plt.subplots(figsize=(5, 3.5))
for task, g in df.groupby("task"):
    m = g.groupby("n")["nmse"].median()
    ax.plot(m.index, m.values, marker="o", label=task)
    ax.scatter(g["n"], g["nmse"], s=6, alpha=0.4)
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("n")
ax.set_ylabel("held-out nmse")
ax.legend()
fig.tight_layout()
fig.savefig(png, dpi=150)

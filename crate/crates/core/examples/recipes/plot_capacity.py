"""Plot C(tau) from capacity.csv.

    python plot_capacity.py out/capacity.csv capacity.png
"""
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

csv = Path(sys.argv[1])
png = sys.argv[2] if len(sys.argv) > 2 else "capacity.png"
df = pd.read_csv(csv, comment="#")
summary = json.loads((csv.parent / "capacity_summary.json").read_text())

fig, ax = plt.subplots(figsize=(6, 3.5))
ax.plot(df["tau"], df["capacity"], marker=".", lw=1)
ax.axhline(summary["threshold"], color="grey", ls=":", label="threshold")
ax.set_xlabel("delay")
ax.set_ylabel("C(delay)")
ax.set_title(f"MC = {summary['total']:.2f}, n = {summary['bound']}")
ax.legend()
fig.tight_layout()
fig.savefig(png, dpi=150)

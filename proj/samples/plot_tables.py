"""Renders the tables written by run_samples.sh. Needs matplotlib.

    python3 samples/plot_tables.py out/
"""

import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path) as f:
        lines = [line for line in f if not line.startswith("# ")]
    return list(csv.DictReader(lines))


def main(out):
    out = Path(out)
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))

    for name, label in [("phase_scan_v2.csv", "V2"), ("phase_scan_v3.csv", "V3"), ("phase_scan_svnp.csv", "V4'")]:
        rows = read(out / name)
        phi = [float(r["phi"]) for r in rows]
        axes[0].plot(phi, [float(r["predicted"]) for r in rows], label=label)
        axes[0].plot(phi, [float(r["simulated"]) for r in rows], "k.", ms=3)
    axes[0].set_xlabel("phi (rad)")
    axes[0].set_ylabel("visibility")
    axes[0].legend()

    for name, style in [("entlen_distinguishing.csv", "o-"), ("entlen_depolarizing.csv", "s--")]:
        rows = read(out / name)
        axes[1].plot([float(r["v2"]) for r in rows], [int(r["L"]) for r in rows], style, ms=3, label=name.split("_")[1][:-4])
    axes[1].set_xlabel("V2")
    axes[1].set_ylabel("entanglement length")
    axes[1].set_yscale("log")
    axes[1].legend()

    rows = read(out / "scaling_comparison.csv")
    for series in ("pdc_with_gate", "gate_floor"):
        pts = [r for r in rows if r["series"] == series]
        axes[2].plot([float(r["v2"]) for r in pts], [float(r["r"]) for r in pts], label=series)
    for r in rows:
        if r["series"].startswith("point:"):
            axes[2].plot(float(r["v2"]), float(r["r"]), "r*", ms=9)
            axes[2].annotate(r["series"][6:], (float(r["v2"]), float(r["r"])), fontsize=7)
    axes[2].set_xlabel("V2")
    axes[2].set_ylabel("scaling ratio r")
    axes[2].set_yscale("log")
    axes[2].legend()

    fig.tight_layout()
    fig.savefig(out / "summary.png", dpi=150)
    print(out / "summary.png")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "out")

#!/usr/bin/env python3
"""Plot learning curves from `pistol train` CSV output.

Reads one or more CSVs produced with `--grid ... --shuffles ...`, pulls
the per-T `mean`/`std` aggregate rows, and draws test error vs training
set size on log-log axes with error bars. Not part of the tool contract;
the CSVs are the interface.

Usage:
    python3 docs/plot_curves.py curves_pistol.csv curves_asgd.csv -o curves.png
"""

import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load_aggregates(path):
    means, stds = {}, {}
    label = None
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if label is None:
                label = row["algo"] + (f" eta={row['eta']}" if row["eta"] else "")
            t = int(row["T"])
            if row["seed"] == "mean":
                means[t] = float(row["test_error"])
            elif row["seed"] == "std":
                stds[t] = float(row["test_error"])
    ts = sorted(means)
    return label, ts, [means[t] for t in ts], [stds.get(t, 0.0) for t in ts]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csvs", nargs="+", help="pistol train CSV files")
    ap.add_argument("-o", "--out", default="curves.png")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(6, 4))
    seen = defaultdict(int)
    for path in args.csvs:
        label, ts, errs, stds = load_aggregates(path)
        seen[label] += 1
        if seen[label] > 1:
            label = f"{label} ({seen[label]})"
        ax.errorbar(ts, errs, yerr=stds, marker="o", capsize=3, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("training examples")
    ax.set_ylabel("test error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

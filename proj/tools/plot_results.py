#!/usr/bin/env python3
"""Render the CSV outputs of the bnbei experiments as PNG figures.

Usage: plot_results.py RESULTS_DIR

Every *_aggregate.csv and derivplots.csv found below RESULTS_DIR is plotted
into a PNG next to it.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_direct(df, out):
    df = df[df.method.isin(["bnb", "ga"])]
    groups = sorted(df.n0.unique())
    fig, ax = plt.subplots(figsize=(5, 4))
    width = 0.35
    for i, method in enumerate(["bnb", "ga"]):
        sub = df[df.method == method].set_index("n0").loc[groups]
        xs = [g + (i - 0.5) * width for g in range(len(groups))]
        ax.bar(xs, sub["mean"], width, yerr=sub["stderr"], capsize=4, label=method)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels([f"n0 = {g}" for g in groups])
    ax.set_ylabel("mean maximized EI")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def plot_by_k(df, metric, ylabel, out):
    sub = df[df.metric == metric]
    if sub.empty:
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    for method, g in sub.groupby("method"):
        g = g.sort_values("k")
        ax.errorbar(g.k, g["mean"], yerr=g["stderr"].fillna(0), marker="o", ms=3, capsize=2, label=method)
    ax.set_xlabel("points added k")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def plot_derivatives(df, out_dir):
    for column, name in [("d_dt", "partial in t"), ("d_ds", "partial in s")]:
        fig, ax = plt.subplots(figsize=(5, 4))
        for s, g in df.groupby("s"):
            ax.plot(g.t, g[column], label=f"s = {s:g}")
        ax.axhline(0.0, color="grey", lw=0.5, ls="--")
        ax.set_xlabel("t")
        ax.set_ylabel(name)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / f"{column}.png")
        plt.close(fig)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("results", type=Path)
    args = parser.parse_args()

    written = []
    for path in sorted(args.results.rglob("*_aggregate.csv")):
        df = pd.read_csv(path)
        stem = path.with_suffix("")
        if path.name == "direct_aggregate.csv":
            plot_direct(df, stem.with_suffix(".png"))
            written.append(stem.with_suffix(".png"))
        elif path.name == "longrun_aggregate.csv":
            for metric, label in [("fmax_est", "max estimate"), ("fmin_est", "min estimate"),
                                  ("d_k", "contour divergence")]:
                out = Path(f"{stem}_{metric}.png")
                plot_by_k(df, metric, label, out)
                if out.exists():
                    written.append(out)
        elif path.name == "study_aggregate.csv":
            out = stem.with_suffix(".png")
            plot_by_k(df, "band_proportion", "proportion in band", out)
            written.append(out)
    for path in sorted(args.results.rglob("derivplots.csv")):
        plot_derivatives(pd.read_csv(path), path.parent)
        written += [path.parent / "d_dt.png", path.parent / "d_ds.png"]
    for p in written:
        print(p)


if __name__ == "__main__":
    main()

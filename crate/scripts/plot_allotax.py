#!/usr/bin/env python3
"""Render an allotaxonograph from the cell-grid JSON the CLI emits.

Usage:
    python3 scripts/plot_allotax.py OUT_DIR/allotax_cells.json [-o plot.png]
                                    [--wordshift OUT_DIR/wordshift.csv]

The JSON holds a square histogram of (log10 rank in corpus 1, log10 rank in
corpus 2) cells plus two edge vectors for types exclusive to either corpus.
The grid is drawn rotated 45 degrees into the usual diamond orientation,
with an optional word-shift bar panel alongside.
"""

import argparse
import csv
import json
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load_cells(path):
    with open(path) as handle:
        data = json.load(handle)
    bins = data["bins_per_side"]
    grid = np.zeros((bins, bins))
    for row, col, count in data["cells"]:
        grid[row][col] = count
    return data, grid


def draw_diamond(ax, data, grid):
    bins = data["bins_per_side"]
    log_max = max(data["log_rank_max"], 1e-9)
    vmax = grid.max() if grid.max() > 0 else 1.0
    cmap = plt.get_cmap("viridis")
    for i in range(bins):
        for j in range(bins):
            count = grid[i][j]
            if count == 0:
                continue
            # Rotate (rank1, rank2) into diamond coordinates.
            x0, y0 = (j - i) / math.sqrt(2), (i + j) / math.sqrt(2)
            half = 1.0 / math.sqrt(2)
            shade = cmap(0.25 + 0.75 * math.log1p(count) / math.log1p(vmax))
            ax.fill(
                [x0, x0 + half, x0, x0 - half],
                [y0 - half, y0, y0 + half, y0],
                color=shade,
                linewidth=0,
            )
    # Exclusive-type edge lines hug the lower sides of the diamond.
    for side, counts in (("left", data["exclusive_left"]), ("right", data["exclusive_right"])):
        sign = -1.0 if side == "left" else 1.0
        for b, count in enumerate(counts):
            if count == 0:
                continue
            y = b / math.sqrt(2)
            x = sign * (b + 1.5) / math.sqrt(2)
            ax.plot([x], [y], marker="o", markersize=3 + math.log1p(count), color="dimgray")
    span = (bins + 2) / math.sqrt(2)
    ax.plot([0, 0], [0, bins * math.sqrt(2)], color="gray", linewidth=0.6, linestyle="--")
    ax.set_xlim(-span, span)
    ax.set_ylim(-0.5, bins * math.sqrt(2) + 0.5)
    ax.set_aspect("equal")
    ax.set_xlabel(f"rank divergence (log10 rank up to {log_max:.2f} per side)")
    ax.set_yticks([])
    ax.set_xticks([])
    for spine in ax.spines.values():
        spine.set_visible(False)


def draw_wordshift(ax, path, top_k):
    rows = []
    with open(path) as handle:
        for row in csv.DictReader(handle):
            rows.append(row)
    rows = rows[:top_k]
    labels = [row["token"] for row in rows][::-1]
    values = [
        float(row["contribution"]) * (-1.0 if row["side"].endswith("left") else 1.0)
        for row in rows
    ][::-1]
    colors = ["steelblue" if v >= 0 else "indianred" for v in values]
    ax.barh(range(len(values)), values, color=colors)
    ax.set_yticks(range(len(labels)), labels, fontsize=7)
    ax.axvline(0.0, color="gray", linewidth=0.6)
    ax.set_xlabel("divergence contribution")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("cells", help="allotax_cells.json produced by the CLI")
    parser.add_argument("-o", "--output", default="allotax.png")
    parser.add_argument("--wordshift", help="optional wordshift.csv for a side panel")
    parser.add_argument("--top-k", type=int, default=25)
    args = parser.parse_args()

    data, grid = load_cells(args.cells)
    if args.wordshift:
        fig, (ax_grid, ax_shift) = plt.subplots(
            1, 2, figsize=(11, 6), gridspec_kw={"width_ratios": [2, 1]}
        )
        draw_wordshift(ax_shift, args.wordshift, args.top_k)
    else:
        fig, ax_grid = plt.subplots(figsize=(7, 7))
    draw_diamond(ax_grid, data, grid)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()

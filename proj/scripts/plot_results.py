#!/usr/bin/env python3
"""Render charts from a `mesoroute compare` output directory.

Usage: plot_results.py COMPARE_DIR [--out DIR]

Reads runs.csv, stations_long.csv and series_long.csv (see
docs/output-format.md) and writes four PNGs.
"""
import argparse
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

ORDER = ["srp-no-joint-dl", "srp", "drp", "coordinated"]


def policy_order(policies):
    known = [p for p in ORDER if p in policies]
    return known + sorted(set(policies) - set(known))


def plot_series(series, out):
    cols = [("bus_delay", "accumulated bus delay [s]"),
            ("cum_cav_time", "cumulative connected-vehicle travel [s]"),
            ("cum_hv_time", "cumulative conventional-vehicle travel [s]")]
    mean = series.groupby(["policy", "t"], as_index=False)[[c for c, _ in cols]].mean()
    for col, label in cols:
        fig, ax = plt.subplots(figsize=(6, 4))
        for pol in policy_order(mean["policy"].unique()):
            sub = mean[mean["policy"] == pol]
            ax.plot(sub["t"], sub[col], label=pol)
        ax.set_xlabel("time [s]")
        ax.set_ylabel(label)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"{col}.png", dpi=150)
        plt.close(fig)


def plot_stations(stations, out):
    mean = stations.groupby(["policy", "station"], as_index=False)["pct_on_time"].mean()
    pivot = mean.pivot(index="station", columns="policy", values="pct_on_time")
    pivot = pivot[policy_order(pivot.columns)]
    ax = pivot.plot.bar(figsize=(6, 4), rot=0)
    ax.set_ylabel("on-time arrivals [%]")
    ax.set_xlabel("station")
    ax.figure.tight_layout()
    ax.figure.savefig(out / "on_time_by_station.png", dpi=150)
    plt.close(ax.figure)


def plot_p90(runs, out):
    mean = runs.groupby("policy", as_index=False)[
        ["cav_p90_travel", "hv_p90_travel", "bus_p90_travel"]].mean()
    mean = mean.set_index("policy").loc[policy_order(mean["policy"])]
    mean.columns = ["connected", "conventional", "bus"]
    ax = mean.plot.bar(figsize=(6, 4), rot=15)
    ax.set_ylabel("90th-percentile travel time [s]")
    ax.figure.tight_layout()
    ax.figure.savefig(out / "p90_travel.png", dpi=150)
    plt.close(ax.figure)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("compare_dir", type=pathlib.Path)
    ap.add_argument("--out", type=pathlib.Path, default=None)
    args = ap.parse_args()
    src = args.compare_dir
    out = args.out or src
    out.mkdir(parents=True, exist_ok=True)

    missing = [n for n in ("runs.csv", "stations_long.csv", "series_long.csv")
               if not (src / n).exists()]
    if missing:
        sys.exit(f"not a compare directory, missing: {', '.join(missing)}")

    runs = pd.read_csv(src / "runs.csv")
    runs = runs[runs["ok"] == 1]
    plot_series(pd.read_csv(src / "series_long.csv"), out)
    plot_stations(pd.read_csv(src / "stations_long.csv"), out)
    plot_p90(runs, out)
    print(f"wrote 5 charts to {out}")


if __name__ == "__main__":
    main()

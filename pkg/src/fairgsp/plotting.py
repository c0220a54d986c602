"""Render the three summary panels (overall welfare, per-group welfare,
compensation fraction) from a summary CSV to PNG files."""

from __future__ import annotations

import csv
from pathlib import Path


def _load_summary(summary_csv: Path) -> list[dict]:
    with open(summary_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"no rows in {summary_csv}")
    return rows


def _f(row: dict, key: str) -> float:
    return float(row[key])


def render_summary_figures(summary_csv: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Write welfare.png, group_welfare.png, and compensation.png next to
    the summary CSV (or into ``out_dir``). Returns the written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    summary_csv = Path(summary_csv)
    out = Path(out_dir) if out_dir is not None else summary_csv.parent
    rows = _load_summary(summary_csv)
    sweep = [r for r in rows if r["mechanism"] == "beta-fair"]
    sweep.sort(key=lambda r: int(r["xi_h"]))
    efx = [r for r in rows if r["mechanism"] == "gsp-efx"]
    gsp = [r for r in rows if r["mechanism"] == "gsp"]

    if sweep:
        xs = [int(r["xi_h"]) for r in sweep]
        label = r"$\xi_h$"
    elif efx:
        xs = [0]
        label = ""
    else:
        xs = [0]
        label = ""
    span = (min(xs), max(xs))

    def flat(ax, value, text, style):
        ax.hlines(value, span[0], span[1], linestyles=style, label=text, color="gray")

    written = []

    # Panel 1: overall welfare at equilibrium vs the sweep.
    fig, ax = plt.subplots(figsize=(5, 3.4))
    series = sweep or efx
    if series:
        ax.errorbar(
            xs,
            [_f(r, "sw_eq_mean") for r in series],
            yerr=[_f(r, "sw_eq_std") for r in series],
            marker="o",
            capsize=3,
            label=series[0]["mechanism"],
        )
        flat(ax, _f(series[0], "sw_opt_mean"), "truthful GSP", "dotted")
    if gsp:
        flat(ax, _f(gsp[0], "sw_eq_mean"), "GSP at equilibrium", "dashed")
    ax.set_xlabel(label)
    ax.set_ylabel("social welfare")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "welfare.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    # Panel 2: per-group welfare at equilibrium.
    fig, ax = plt.subplots(figsize=(5, 3.4))
    if series:
        for key, name in (("sw_eq_h_mean", "group H"), ("sw_eq_l_mean", "group L")):
            ax.errorbar(
                xs,
                [_f(r, key) for r in series],
                yerr=[_f(r, key.replace("mean", "std")) for r in series],
                marker="o",
                capsize=3,
                label=name,
            )
    if gsp:
        flat(ax, _f(gsp[0], "sw_eq_h_mean"), "GSP group H", "dashed")
        flat(ax, _f(gsp[0], "sw_eq_l_mean"), "GSP group L", "dashdot")
    ax.set_xlabel(label)
    ax.set_ylabel("per-group social welfare")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "group_welfare.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    # Panel 3: fraction of auction revenue paid back as compensation.
    fig, ax = plt.subplots(figsize=(5, 3.4))
    if series:
        ax.errorbar(
            xs,
            [_f(r, "comp_fraction_mean") for r in series],
            yerr=[_f(r, "comp_fraction_std") for r in series],
            marker="o",
            capsize=3,
            color="firebrick",
        )
    ax.set_xlabel(label)
    ax.set_ylabel("compensation / GSP revenue")
    fig.tight_layout()
    path = out / "compensation.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written

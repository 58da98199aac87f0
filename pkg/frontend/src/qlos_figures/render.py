"""Render sweep tables into deterministic figure files.

Determinism contract: same CSV bytes -> same image bytes. Everything
that could drift is pinned: Agg backend, fixed figure geometry, series
sorted by label, rows sorted by x, fixed color assignment, a fixed
svg hashsalt, and no date/creator metadata in the output.
"""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .spec import FigureSpec  # noqa: E402
from .tables import (SchemaError, range_ratio, read_table,  # noqa: E402
                     require_columns, total_bits)

matplotlib.rcParams["svg.hashsalt"] = "qlos-figures"

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f")

AXIS_LABELS = {"mi_vs_snr": ("SNR (dB)", "mutual information (bits)"),
               "mi_vs_theta": ("crossover phase (rad)",
                               "mutual information (bits)"),
               "ber_vs_snr": ("SNR (dB)", "bit error rate"),
               "ber_vs_range": ("R / R_nominal", "bit error rate")}


@dataclass(frozen=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    band: np.ndarray        # one-sigma half width, zeros where unknown
    censored: np.ndarray    # True where y is a clip level, not a value


def _group(tagged_rows, group_by):
    """tagged_rows: (table, row) pairs -> {label: [(table, row), ...]}."""
    groups = {}
    for table, row in tagged_rows:
        label = " ".join(str(row[k]) for k in group_by)
        groups.setdefault(label, []).append((table, row))
    return groups


def _tag_rows(tables, needed, kind, group_by):
    tagged = []
    for table in tables:
        require_columns(table, tuple(needed) + tuple(group_by), kind)
        tagged.extend((table, row) for row in table.rows)
    if not tagged:
        raise SchemaError("no data rows in the input tables")
    return tagged


def _sorted_series(label, x, y, band, censored):
    order = np.argsort(x, kind="stable")
    return Series(label, np.asarray(x)[order], np.asarray(y)[order],
                  np.asarray(band)[order], np.asarray(censored)[order])


def mi_series(tables, group_by, kind) -> list:
    x_col = "snr_db" if kind == "mi_vs_snr" else "theta_rad"
    tagged = _tag_rows(tables, (x_col, "mi_bits", "stderr"), kind, group_by)
    out = []
    for label, pairs in sorted(_group(tagged, group_by).items()):
        x = [row[x_col] for _, row in pairs]
        y = [row["mi_bits"] for _, row in pairs]
        band = [row["stderr"] for _, row in pairs]
        out.append(_sorted_series(label, x, y, band,
                                  np.zeros(len(x), dtype=bool)))
    return out


def ber_series(tables, group_by, kind) -> list:
    needed = ("ber", "stderr", "bit_errors", "frames", "n", "modulation",
              "snr_db" if kind == "ber_vs_snr" else "theta_rad")
    tagged = _tag_rows(tables, needed, kind, group_by)
    out = []
    for label, pairs in sorted(_group(tagged, group_by).items()):
        x, y, band, censored = [], [], [], []
        for table, row in pairs:
            if kind == "ber_vs_snr":
                x.append(row["snr_db"])
            else:
                x.append(range_ratio(table, row, kind))
            zero = row["bit_errors"] == 0
            # a clean run bounds the rate rather than measuring it;
            # show it at half a count and mark it open
            y.append(0.5 / total_bits(row) if zero else row["ber"])
            band.append(0.0 if zero else row["stderr"])
            censored.append(zero)
        out.append(_sorted_series(label, x, y, band, censored))
    return out


def build_series(spec: FigureSpec) -> list:
    tables = [read_table(p) for p in spec.csv]
    if spec.kind.startswith("mi_"):
        return mi_series(tables, spec.group_by, spec.kind)
    return ber_series(tables, spec.group_by, spec.kind)


def _draw(spec: FigureSpec, series: list):
    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=150)
    log_y = spec.kind.startswith("ber_")
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        ax.plot(s.x, s.y, color=color, marker="o", markersize=3.5,
                linewidth=1.2, label=s.label)
        if np.any(s.band > 0):
            lo = s.y - s.band
            hi = s.y + s.band
            if log_y:
                lo = np.maximum(lo, s.y * 0.1)
            ax.fill_between(s.x, lo, hi, color=color, alpha=0.2,
                            linewidth=0)
        if np.any(s.censored):
            ax.plot(s.x[s.censored], s.y[s.censored], linestyle="none",
                    marker="o", markersize=8, markerfacecolor="none",
                    markeredgecolor=color, markeredgewidth=1.2)
    if log_y:
        ax.set_yscale("log")
    xlabel, ylabel = AXIS_LABELS[spec.kind]
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def render(spec: FigureSpec, out_dir) -> Path:
    """Draw one figure; returns the written path."""
    series = build_series(spec)
    fig = _draw(spec, series)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / spec.output
    if out_path.suffix == ".svg":
        metadata = {"Date": None, "Creator": None}
    else:
        metadata = {"Software": None}
    try:
        fig.savefig(out_path, metadata=metadata)
    finally:
        plt.close(fig)
    return out_path

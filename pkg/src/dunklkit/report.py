"""Report writers: delimited tables, JSON summaries, and figures.

Every CLI report path writes CSV (stable %.12e formatting, suitable for
golden-file comparison) plus a JSON summary, and renders matplotlib
figures to PNG files alongside unless plotting is disabled.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def ensure_outdir(path: str) -> str:
    path = os.environ.get("DUNKLKIT_OUTDIR", "") or path
    os.makedirs(path, exist_ok=True)
    return path


def write_lines(path: str, lines) -> str:
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_csv(path: str, header: str, rows) -> str:
    lines = [header] + [",".join(str(c) for c in row) for row in rows]
    return write_lines(path, lines)


def write_json(path: str, payload: dict) -> str:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return path


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def fig_condition_report(report, path: str) -> str:
    """Per-t condition values on log-log axes with the sup marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(report.t_nodes, report.values, "o-", ms=3, lw=1)
    ax.axhline(report.sup, color="tab:red", lw=0.8, ls="--", label=f"sup = {report.sup:.4g}")
    ax.set_xlabel("t")
    ax.set_ylabel("weighted integral")
    ax.set_title(f"modified condition, m = {report.multiplier}, s = {report.s:g}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fig_sweep(result, path: str) -> str:
    """Ratio table as grouped bars per (field, p)."""
    rows = result.rows
    labels = [f"{r['field']}\np={r['p']:g}" for r in rows]
    ratios = [r["ratio"] for r in rows]
    fig, ax = plt.subplots(figsize=(max(6, 0.7 * len(rows)), 4))
    ax.bar(range(len(rows)), ratios, color="tab:blue")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, fontsize=6, rotation=45, ha="right")
    ax.set_ylabel("||T_m f||_p / ||f||_p")
    ax.set_title(f"multiplier sweep, m = {result.metadata.get('multiplier', '?')}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fig_gfunctions(x, curves: dict, path: str, title: str = "") -> str:
    """g / g* / M profiles along the grid (1D) or along |x|."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, vals in curves.items():
        ax.plot(x, vals, lw=1, label=name)
    ax.set_xlabel("x")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fig_domination(results, path: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    names = [r.field for r in results]
    pw = [r.pointwise_constant for r in results]
    ig = [r.integrated_constant for r in results]
    xs = np.arange(len(names))
    ax.bar(xs - 0.2, pw, width=0.4, label="pointwise")
    ax.bar(xs + 0.2, ig, width=0.4, label="integrated")
    ax.set_xticks(xs)
    ax.set_xticklabels(names, fontsize=7, rotation=30, ha="right")
    ax.set_ylabel("domination constant")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

"""Figure rendering: every CSV the CLI writes gets a companion PNG."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def sweep_figure(df: pd.DataFrame, out_path, title: str = "") -> None:
    """Empirical value vs mean buffer width, one curve per cost, with the
    lambda = 1 point highlighted."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for eps, grp in df.groupby("epsilon"):
        grp = grp.sort_values("lambda")
        line, = ax.plot(grp["mean_buffer_width"], grp["v_emp"], "-",
                        label=f"eps = {eps:g}")
        one = grp[grp["is_lambda_one"]]
        ax.plot(one["mean_buffer_width"], one["v_emp"], "o",
                color=line.get_color(), ms=7)
    ax.set_xlabel("mean buffer half-width")
    ax.set_ylabel("empirical value")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def oracle_figure(df: pd.DataFrame, out_path, best_width: float | None = None,
                  formula_width: float | None = None, title: str = "") -> None:
    """Empirical value vs constant half-width, marking the argmax."""
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(df["width"], df["v_emp"], "-")
    if best_width is not None:
        ax.axvline(best_width, color="tab:green", ls="--", label=f"oracle {best_width:g}")
    if formula_width is not None:
        ax.axvline(formula_width, color="tab:red", ls=":", label=f"formula {formula_width:g}")
    ax.set_xlabel("constant half-width")
    ax.set_ylabel("empirical value")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def path_figure(df: pd.DataFrame, out_path, title: str = "") -> None:
    """Stacked view of factors / volatility, the tradable, and (when present)
    position and account curve."""
    has_pos = "position" in df.columns
    n_ax = 3 if has_pos else 2
    fig, axes = plt.subplots(n_ax, 1, figsize=(9, 2.8 * n_ax), sharex=True)
    t = df["t"]
    for col in df.columns:
        if col.startswith("z"):
            axes[0].plot(t, df[col], lw=0.5, label=col)
    if "vol_multiplier" in df.columns:
        axes[0].plot(t, df["vol_multiplier"], lw=0.5, color="tab:red", label="vol multiplier")
    axes[0].legend(loc="upper right", fontsize=8)
    axes[0].set_ylabel("factors")
    axes[1].plot(t, df["x"], lw=0.5, color="k")
    axes[1].set_ylabel("price")
    if has_pos:
        axes[2].plot(t, df["position"], lw=0.5, label="position")
        ax2 = axes[2].twinx()
        ax2.plot(t, df["account"], lw=0.8, color="tab:green", label="account")
        axes[2].set_ylabel("position")
        ax2.set_ylabel("account")
    axes[-1].set_xlabel("t")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def backtest_figure(df: pd.DataFrame, out_path, title: str = "") -> None:
    """Price with band, position, and account curve for one backtest."""
    fig, axes = plt.subplots(3, 1, figsize=(9, 8), sharex=True)
    t = np.arange(len(df))
    axes[0].plot(t, df["x"], lw=0.6, color="k")
    axes[0].set_ylabel("price")
    axes[1].plot(t, df["target"], lw=0.5, color="tab:gray", label="target")
    axes[1].fill_between(t, df["lower"], df["upper"], alpha=0.25, label="NT band")
    axes[1].plot(t, df["position"], lw=0.8, color="tab:blue", label="position")
    axes[1].legend(loc="upper right", fontsize=8)
    axes[1].set_ylabel("position")
    axes[2].plot(t, df["net_pnl"], lw=0.8, color="tab:green")
    axes[2].set_ylabel("net P&L")
    axes[2].set_xlabel("step")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def calibration_figure(df: pd.DataFrame, out_path, best_beta: float | None = None,
                       title: str = "") -> None:
    """Empirical value as a function of the trialled signal strength."""
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(df["beta"], df["v_emp"], "o-")
    if best_beta is not None:
        ax.axvline(best_beta, color="tab:green", ls="--", label=f"best beta {best_beta:g}")
        ax.legend()
    ax.set_xlabel("beta")
    ax.set_ylabel("empirical value")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)

"""Figures written next to the CSV tables of a run.

Everything renders through the Agg backend with metadata stripped, so a
given run always produces the same PNG bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}
FIGSIZE = (5.0, 3.2)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def certificate_figure(path, ghat_values, ghat_norm, selected, argmax_tol):
    """|g(theta_p)| / max|g| per candidate, selected atoms marked."""
    ghat_values = np.asarray(ghat_values, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        idx = np.arange(ghat_values.size)
        level = np.abs(ghat_values) / ghat_norm if ghat_norm > 0 else np.zeros_like(ghat_values)
        ax.plot(idx, level, ".", ms=2.5, color="0.55", label="candidates")
        sel = np.asarray(selected, dtype=int)
        if sel.size:
            ax.plot(sel, level[sel], "o", ms=5, mfc="none", color="C3", label="atoms")
        ax.axhline(1.0 - argmax_tol, color="C0", lw=0.8, ls="--", label="argmax threshold")
        ax.set_xlabel("candidate index")
        ax.set_ylabel(r"$|\hat g(\theta_p)| / \|\hat g\|_\infty$")
        ax.set_ylim(0.0, 1.05)
        ax.legend(loc="lower right", frameon=False)
        return _save(fig, path)


def trace_figure(path, rounds, cstars):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        ax.plot(rounds, cstars, "o-", color="C0")
        ax.set_xlabel("refinement round")
        ax.set_ylabel(r"$C^*$")
        ax.set_xticks(list(rounds))
        return _save(fig, path)


def coefficient_figure(path, coeffs):
    coeffs = np.asarray(coeffs, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        ax.stem(np.arange(coeffs.size), coeffs, markerfmt=".", basefmt=" ")
        ax.set_xlabel("candidate index")
        ax.set_ylabel("coefficient")
        return _save(fig, path)


def path_figure(path, lambdas, tvs, losses):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        ax.semilogx(lambdas, tvs, "o-", color="C0", label="TV norm")
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel("TV norm")
        ax.invert_xaxis()
        ax2 = ax.twinx()
        ax2.semilogx(lambdas, losses, "s--", color="C1", ms=3, label="loss")
        ax2.set_ylabel("loss")
        ax2.spines["top"].set_visible(False)
        return _save(fig, path)


def loss_figure(path, losses):
    losses = np.asarray(losses, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        positive = np.maximum(losses, np.finfo(float).tiny)
        ax.semilogy(np.arange(losses.size), positive, color="C0")
        ax.set_xlabel("accepted iteration")
        ax.set_ylabel("training loss")
        return _save(fig, path)

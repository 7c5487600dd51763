"""Figure rendering for the CLI report paths.

Every experiment that emits delimited data also renders a PNG next to
it (disable with --no-figures).  Rendering goes through the Agg
backend so runs are headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def trajectory_figure(times, states, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(min(states.shape[1], 8)):
        ax.plot(times, states[:, i], lw=0.8, label=f"x_{i + 1}")
    ax.set_xlabel("t")
    ax.set_ylabel("state")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def invariant_figure(states, path):
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.5))
    axes[0].hist(states[:, 0], bins=60, density=True, alpha=0.8)
    axes[0].set_xlabel("x_1")
    axes[0].set_ylabel("density")
    if states.shape[1] > 1:
        axes[1].plot(states[:2000, 0], states[:2000, 1], ".", ms=2, alpha=0.4)
        axes[1].set_xlabel("x_1")
        axes[1].set_ylabel("x_2")
    else:
        axes[1].axis("off")
    _save(fig, path)


def decay_figure(times, values, fit, path, ylabel="W distance"):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(times, values, "o", ms=3, label="measured")
    if fit is not None:
        t = np.asarray(times, dtype=float)
        ax.semilogy(t, np.exp(fit.intercept - fit.rate * t), "-",
                    label=f"fit rate {fit.rate:.3g} (r2 {fit.r_squared:.3f})")
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def picard_figure(ratios, path):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(np.arange(1, len(ratios) + 1), ratios)
    ax.axhline(0.5, color="k", ls="--", lw=0.8, label="halving target")
    ax.set_xlabel("iteration n")
    ax.set_ylabel("gap ratio")
    ax.legend(fontsize=8)
    _save(fig, path)


def comparison_figure(checkpoint_times, rho, bound, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(checkpoint_times, rho, "o-", ms=3, label="rho(occupation laws)")
    ax.plot(checkpoint_times, bound, "s--", ms=3, label="running integral / t")
    ax.set_xlabel("t")
    ax.set_ylabel("truncated coupling distance")
    ax.legend(fontsize=8)
    _save(fig, path)


def checks_figure(reports, path):
    names = [r.name for r in reports]
    fig, ax = plt.subplots(figsize=(7, 0.8 + 0.6 * len(names)))
    y = np.arange(len(names))
    lhs = [r.lhs if np.isfinite(r.lhs) else 0.0 for r in reports]
    rhs = [r.rhs if np.isfinite(r.rhs) else 0.0 for r in reports]
    ax.barh(y - 0.18, lhs, height=0.36, label="lhs")
    ax.barh(y + 0.18, rhs, height=0.36, label="rhs")
    ax.set_yticks(y)
    ax.set_yticklabels([f"{n} [{'ok' if r.verdict else 'FAIL'}]"
                        for n, r in zip(names, reports)], fontsize=8)
    ax.legend(fontsize=8)
    _save(fig, path)


def dvrate_figure(m_values, v_values, grid, path):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    im = ax.imshow(grid, origin="lower", aspect="auto",
                   extent=[min(m_values), max(m_values),
                           min(v_values), max(v_values)])
    fig.colorbar(im, ax=ax, label="rate function")
    ax.set_xlabel("mean shift")
    ax.set_ylabel("variance")
    _save(fig, path)


def hitting_figure(estimate, censored, path):
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.bar([0, 1], [estimate, censored])
    ax.set_xticks([0, 1])
    ax.set_xticklabels(["exp moment", "censored frac"])
    _save(fig, path)

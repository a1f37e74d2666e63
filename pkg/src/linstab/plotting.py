"""Figures for the CLI report path. Imported lazily so the numerical core
never pulls in matplotlib."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def profile_figure(rows: list, path: Path, name: str = "") -> Path:
    K = [r["K"] for r in rows]
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
    ax[0].step(K, [r["psi"] for r in rows], where="post")
    ax[0].set_xlabel("K")
    ax[0].set_ylabel("Psi(K)")
    ax[0].set_yscale("log")
    ax[1].plot(K, [r["lambda"] for r in rows], marker=".")
    ax[1].set_xlabel("K")
    ax[1].set_ylabel("Lambda(K)")
    ax[1].set_yscale("log")
    if name:
        fig.suptitle(name)
    return _save(fig, path)


def verify_figure(reports: list, path: Path) -> Path:
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
    for r in reports:
        ax[0].loglog(r["delta_grid"], r["t_measured"], marker="o", label=f"q={r['q']}")
    ax[0].set_xlabel("delta")
    ax[0].set_ylabel("first passage time")
    ax[0].legend(fontsize=7)
    q = [r["q"] for r in reports]
    ax[1].plot(q, [r["log_t_first"] for r in reports], "o-", label="measured")
    ax[1].plot(q, [r["log_T_first"] for r in reports], "s--", label="predicted ceiling")
    ax[1].set_xlabel("q_j")
    ax[1].set_ylabel("log time at smallest delta")
    ax[1].legend(fontsize=7)
    return _save(fig, path)


def normalform_figure(Ks: list, remainders: list, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.semilogy(Ks, [max(r, 1e-300) for r in remainders], "o-")
    ax.set_xlabel("K")
    ax.set_ylabel("remainder majorant")
    return _save(fig, path)


def trajectory_figure(times, I, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for i in range(I.shape[1]):
        ax.plot(times, I[:, i] - I[0, i], label=f"I_{i + 1} - I_{i + 1}(0)")
    ax.set_xlabel("t")
    ax.set_ylabel("action drift")
    ax.legend(fontsize=7)
    return _save(fig, path)

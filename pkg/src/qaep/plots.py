"""Figure rendering for the report path.

Each command saves one PNG next to its delimited output.  Rendering uses
the Agg backend so the CLI works headless.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, outdir: str, name: str) -> str:
    path = os.path.join(outdir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_entropy(per_state: dict[str, dict], outdir: str) -> str:
    """Entropy density per volume with the extrapolated limit."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, est in per_state.items():
        ns = [r["n"] for r in est["rows"]]
        ax.plot(ns, [r["entropy_per_n"] for r in est["rows"]], "o-", label=name)
        ax.axhline(est["limit"], color=ax.lines[-1].get_color(), ls="--", lw=0.8)
    ax.set_xlabel("volume n")
    ax.set_ylabel("S_n / n  [nats]")
    ax.legend(fontsize=8)
    ax.set_title("mean entropy sweep")
    return _finish(fig, outdir, "entropy.png")


def plot_typicality(per_state: dict[str, dict], outdir: str) -> str:
    """omega(p_n) trend and the rank bounds of the first state."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    for name, rep in per_state.items():
        ns = [r["n"] for r in rep["rows"]]
        ax1.plot(ns, [r["omega_pn"] for r in rep["rows"]], "o-", label=name)
    ax1.set_xlabel("volume n")
    ax1.set_ylabel("omega(p_n)")
    ax1.set_ylim(-0.05, 1.05)
    ax1.legend(fontsize=8)
    ax1.set_title("typical-projection mass")
    if per_state:
        name, rep = next(iter(per_state.items()))
        ns = [r["n"] for r in rep["rows"]]
        ax2.plot(ns, [max(r["rank"], 1e-12) for r in rep["rows"]], "o-", label="rank")
        ax2.plot(ns, [r["lower_bound"] for r in rep["rows"]], "--", label="lower bound")
        ax2.plot(ns, [r["upper_bound"] for r in rep["rows"]], "--", label="upper bound")
        ax2.set_yscale("log")
        ax2.set_xlabel("volume n")
        ax2.set_ylabel("canonical rank")
        ax2.legend(fontsize=8)
        ax2.set_title(f"rank bounds ({name})")
    return _finish(fig, outdir, "typicality.png")


def plot_deviation(per_state: dict[str, list[dict]], outdir: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rows in per_state.items():
        ns = [r["n"] for r in rows]
        ax.plot(ns, [r["lower_mass"] for r in rows], "o-", label=f"{name}: low tail")
        ax.plot(ns, [r["omega_q_plus"] for r in rows], "s--", lw=0.9,
                label=f"{name}: upper tail")
    ax.set_xlabel("volume n")
    ax.set_ylabel("deviation mass")
    ax.legend(fontsize=7)
    ax.set_title("deviation projection masses")
    return _finish(fig, outdir, "deviation.png")


def plot_pressure(per_obs: dict[str, dict], outdir: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rep in per_obs.items():
        ns = [r["n"] for r in rep["rows"]]
        ax.plot(ns, [r["bulk"] for r in rep["rows"]], "o-", label=f"{name}: bulk")
        fulls = [r["full"] for r in rep["rows"]]
        if all(f == f for f in fulls):
            ax.plot(ns, fulls, ".-", lw=0.8, label=f"{name}: full")
        if rep.get("oracle") is not None:
            ax.axhline(rep["oracle"], color=ax.lines[-1].get_color(), ls=":", lw=1.0)
    ax.set_xlabel("volume n")
    ax.set_ylabel("P_n  [nats]")
    ax.legend(fontsize=7)
    ax.set_title("finite-volume pressure (dotted: oracle)")
    return _finish(fig, outdir, "pressure.png")


def plot_variational(per_obs: dict[str, list[dict]], outdir: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, records in per_obs.items():
        gaps = [max(r["gap"], 1e-18) for r in records]
        ax.plot(range(len(gaps)), gaps, "o-", ms=3, label=name)
    ax.set_yscale("log")
    ax.set_xlabel("candidate (sorted by gap)")
    ax.set_ylabel("variational gap  [nats]")
    ax.legend(fontsize=7)
    ax.set_title("variational inequality gaps")
    return _finish(fig, outdir, "variational.png")


def plot_validate(rows: list[dict], outdir: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = [f"{r['site_dim']},{r['window']}:{r['name']}" for r in rows]
    residuals = [max(r["residual"], 1e-18) for r in rows]
    colors = ["tab:green" if r["passed"] else "tab:red" for r in rows]
    ax.barh(range(len(rows)), residuals, color=colors)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(labels, fontsize=7)
    ax.set_xscale("log")
    ax.set_xlabel("residual")
    ax.set_title("model validity checks")
    return _finish(fig, outdir, "validate.png")

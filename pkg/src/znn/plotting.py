"""Static figures for residual traces and order sweeps (SVG via matplotlib)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed ids and no timestamp so identical traces give identical files
_RC = {"svg.hashsalt": "znn", "svg.fonttype": "none", "font.size": 9}
_META = {"Date": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def _label(cfg):
    gain = f"h={cfg.h:g}" if cfg.h is not None else f"λ={cfg.lam:g}"
    return f"{cfg.problem} / {cfg.solver} / {cfg.formula}, τ={cfg.tau:g}, {gain}"


def plot_trace(trace, path) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 3.6))
        k = trace.column("k")
        res = trace.column("residual")
        ax.semilogy(k, res, lw=1.0)
        ax.set_xlabel("k")
        ax.set_ylabel("residual")
        ax.set_title(_label(trace.config))
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)


def plot_entries(trace, path) -> Path:
    """One panel per solution entry, tracked (solid) vs oracle (dash-dot)."""
    names = [n[len("entry_"):] for n in trace.entry_names if n.startswith("entry_")]
    ncol = 2 if len(names) > 1 else 1
    nrow = -(-len(names) // ncol)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(nrow, ncol, figsize=(3.2 * ncol, 2.4 * nrow), squeeze=False)
        t = trace.column("t")
        for ax, name in zip(axes.flat, names):
            ax.plot(t, trace.column(f"entry_{name}"), lw=1.0, label="ZNN")
            ax.plot(t, trace.column(f"oracle_{name}"), "-.", lw=1.0, label="exact")
            ax.set_title(f"entry ({name.replace('_', ',')})")
            ax.set_xlabel("t [s]")
        for ax in list(axes.flat)[len(names):]:
            ax.set_visible(False)
        axes.flat[0].legend(loc="best")
        fig.suptitle(_label(trace.config))
        fig.tight_layout()
        return _save(fig, path)


def plot_sweep(table, path) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 3.6))
        for tr in table.traces:
            ax.semilogy(tr.column("k"), tr.column("residual"), lw=1.0, label=f"τ={tr.config.tau:g}")
        ax.set_xlabel("k")
        ax.set_ylabel("residual")
        if table.traces:
            cfg = table.traces[0].config
            ax.set_title(f"{cfg.problem} / {cfg.solver} / {cfg.formula}, p̂ = {table.order:.2f}")
            ax.legend(loc="best")
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)

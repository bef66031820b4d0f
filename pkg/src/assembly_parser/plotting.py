"""Figures for evaluation reports, written to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_template_rates(report, path) -> Path:
    rates = report.per_template_rates
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ids = list(rates)
    ax.bar([str(t) for t in ids], [rates[t] for t in ids], color="tab:blue")
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("template")
    ax.set_ylabel("exact-match rate")
    ax.set_title(f"{report.n} parses, overall {report.exact_match_rate:.3f}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_convergence(stats, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    rounds = list(range(0, stats.rounds + 1))
    counts = [stats.histogram.get(r, 0) for r in rounds]
    ax.bar(rounds, counts, color="tab:green", label="converged")
    if stats.unconverged:
        ax.bar([stats.rounds + 1], [stats.unconverged], color="tab:red", label="not converged")
        ax.legend()
    ax.set_xlabel("first converged round")
    ax.set_ylabel("project* calls")
    ax.set_title(f"{stats.total} calls, {stats.converged_fraction:.3%} converged")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def write_figures(report, stats, stem) -> list[Path]:
    """Both figures next to ``stem``: <stem>_templates.png and <stem>_convergence.png."""
    stem = Path(stem)
    out = []
    if report is not None and report.per_template_rates:
        out.append(plot_template_rates(report, stem.with_name(stem.name + "_templates.png")))
    if stats is not None:
        out.append(plot_convergence(stats, stem.with_name(stem.name + "_convergence.png")))
    return out

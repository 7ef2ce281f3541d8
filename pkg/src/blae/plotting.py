"""Figure rendering for result files: regret curves and batch counts."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bench import LoadedResults, _config_diff, _summary_table, load_results

__all__ = ["render_report"]


def _algorithm_labels(results: list[LoadedResults]) -> list[str]:
    labels = []
    for i, res in enumerate(results):
        name = res.algorithm
        if name in labels:
            name = f"{name}#{i}"
        labels.append(name)
    return labels


def _regret_figure(results, labels, out_path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for res, label in zip(results, labels):
        rounds, means, sds = _summary_table(list(res.records))
        ax.plot(rounds, means, label=label, linewidth=1.6)
        ax.fill_between(rounds, means - sds, means + sds, alpha=0.2)
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    cfg = results[0].config
    ax.set_title(
        f"K={cfg.get('n_arms')}, d={cfg.get('dim')}, "
        f"{cfg.get('distribution')} arms, {cfg.get('replications')} replications"
    )
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _batches_figure(results, labels, out_path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    means = []
    for res in results:
        final_round = max(r.round for r in res.records)
        counts = [r.batches for r in res.records if r.round == final_round]
        means.append(float(np.mean(counts)))
    ax.bar(labels, means, width=0.6)
    for x, m in enumerate(means):
        ax.text(x, m, f"{m:.1f}", ha="center", va="bottom")
    ax.set_ylabel("mean policy updates per run")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_report(paths: list[str | Path], out_dir: str | Path | None = None) -> list[Path]:
    """Render comparison figures next to the delimited results.

    Loads each result file, checks the files describe the same instance
    grid (same refusal rule as the text summary), and writes two PNG
    figures into ``out_dir`` (default: the first file's directory):
    ``regret.png`` with per-algorithm mean curves and one-standard-
    deviation bands, and ``batches.png`` with mean policy-update counts.

    Returns the written figure paths.
    """
    if not paths:
        raise ValueError("render_report needs at least one result file")
    results = [load_results(p) for p in paths]
    for res in results:
        if not res.complete:
            raise ValueError(f"result file is incomplete (no completeness marker): {res.path}")
    diffs = _config_diff(results)
    if diffs:
        raise ValueError("result files are not comparable:\n  " + "\n  ".join(diffs))

    target = Path(out_dir) if out_dir is not None else Path(results[0].path).parent
    target.mkdir(parents=True, exist_ok=True)
    labels = _algorithm_labels(results)

    regret_path = target / "regret.png"
    batches_path = target / "batches.png"
    _regret_figure(results, labels, regret_path)
    _batches_figure(results, labels, batches_path)
    return [regret_path, batches_path]

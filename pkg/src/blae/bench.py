"""Experiment runner: replicated bandit runs to delimited result files.

A result file is plain comma-separated text: ``# key = value`` config
lines, one column-header line, one row per (replication, checkpoint),
and a trailing ``# complete`` marker. A run interrupted partway leaves a
valid truncated file whose marker is absent. Floats are written with
``repr`` so identical runs produce byte-identical files.

Replications are paired across algorithms: instance and noise seeds are
derived from (master_seed, replication) only, so every algorithm sees
the same instances and the same per-round noise streams.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import get_algorithm
from .core import MIN_HORIZON, checkpoint_rounds
from .envsim import DISTRIBUTIONS, Environment, InstanceSpec, sample_instance

__all__ = [
    "ExperimentConfig",
    "ResultRecord",
    "LoadedResults",
    "run_experiment",
    "load_results",
    "summarize",
    "WORKERS_ENV_VAR",
    "COMPLETE_MARKER",
]

WORKERS_ENV_VAR = "BLAE_WORKERS"
COMPLETE_MARKER = "# complete"
_COLUMNS = ("replication", "seed", "round", "cum_regret", "batches")

# result-file config keys that must agree before two files may be compared
_SHARED_KEYS = (
    "n_arms",
    "dim",
    "T",
    "distribution",
    "noise_sigma",
    "replications",
    "master_seed",
    "checkpoint_stride",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment file."""

    algorithm: str
    n_arms: int
    dim: int
    T: int
    distribution: str = "uniform"
    replications: int = 10
    master_seed: int = 0
    noise_sigma: float = 1.0
    checkpoint_stride: int = 100
    output_path: str | None = None
    algo_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.algorithm:
            raise ValueError("algorithm name must be non-empty")
        if self.n_arms < 1:
            raise ValueError(f"n_arms must be >= 1, got {self.n_arms}")
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.T < MIN_HORIZON:
            raise ValueError(f"T must be >= {MIN_HORIZON}, got {self.T}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}"
            )
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.checkpoint_stride < 1:
            raise ValueError(
                f"checkpoint_stride must be >= 1, got {self.checkpoint_stride}"
            )


@dataclass(frozen=True)
class ResultRecord:
    """One checkpoint of one replication.

    ``wall_time`` is the whole replication's runtime; it is kept in
    memory and reported in summaries but never written to result rows,
    which must be byte-stable across machines and worker counts.
    """

    replication: int
    seed: int
    round: int
    cum_regret: float
    batches: int
    wall_time: float = 0.0

    def __post_init__(self):
        if self.round < 1:
            raise ValueError(f"round must be >= 1, got {self.round}")
        if self.cum_regret < 0:
            raise ValueError(f"cum_regret must be >= 0, got {self.cum_regret}")
        if self.batches < 1:
            raise ValueError(f"batches must be >= 1, got {self.batches}")


def _derive_seed(master_seed: int, replication: int, stream: int) -> int:
    return int(np.random.SeedSequence((master_seed, replication, stream)).generate_state(1)[0])


def _replicate(job: tuple[ExperimentConfig, int]) -> list[ResultRecord]:
    """Run one replication end to end. Top level so worker pools can pickle it."""
    config, rep = job
    inst_seed = _derive_seed(config.master_seed, rep, 0)
    env_seed = _derive_seed(config.master_seed, rep, 1)
    instance = sample_instance(
        InstanceSpec(
            n_arms=config.n_arms,
            dim=config.dim,
            distribution=config.distribution,
            seed=inst_seed,
            noise_sigma=config.noise_sigma,
        )
    )
    env = Environment(instance, config.T, seed=env_seed)
    runner = get_algorithm(config.algorithm)
    start = time.perf_counter()
    trace = runner(
        instance,
        config.T,
        seed=env_seed,
        checkpoint_stride=config.checkpoint_stride,
        env=env,
        **config.algo_params,
    )
    wall = time.perf_counter() - start
    boundaries = np.asarray(trace.batch_boundaries)
    # number of the batch each checkpoint falls in (started, not finished)
    batches_at = np.searchsorted(boundaries, trace.rounds, side="left") + 1
    return [
        ResultRecord(
            replication=rep,
            seed=inst_seed,
            round=int(t),
            cum_regret=float(reg),
            batches=int(b),
            wall_time=wall,
        )
        for t, reg, b in zip(trace.rounds, trace.cumulative_regret, batches_at)
    ]


def _config_lines(config: ExperimentConfig) -> list[str]:
    lines = [
        f"# algorithm = {config.algorithm}",
        f"# n_arms = {config.n_arms}",
        f"# dim = {config.dim}",
        f"# T = {config.T}",
        f"# distribution = {config.distribution}",
        f"# noise_sigma = {repr(float(config.noise_sigma))}",
        f"# replications = {config.replications}",
        f"# master_seed = {config.master_seed}",
        f"# checkpoint_stride = {config.checkpoint_stride}",
    ]
    for key in sorted(config.algo_params):
        value = config.algo_params[key]
        text = repr(float(value)) if isinstance(value, float) else str(value)
        lines.append(f"# algo.{key} = {text}")
    return lines


def _format_row(record: ResultRecord) -> str:
    return (
        f"{record.replication},{record.seed},{record.round},"
        f"{repr(float(record.cum_regret))},{record.batches}"
    )


def resolve_workers(workers: int | None) -> int:
    """Explicit argument, else the worker-count environment variable, else 1."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def run_experiment(
    config: ExperimentConfig, workers: int | None = None
) -> list[ResultRecord]:
    """Run all replications; write results (and a summary) if configured.

    Replications are independent runs with seeds derived from
    (master_seed, replication index), dispatched across ``workers``
    processes when ``workers > 1``. Rows are always written in
    replication order, so the result file is identical for every worker
    count. The summary file (``<output_path>.summary``) holds the
    per-checkpoint mean and standard deviation of cumulative regret,
    the mean batch count, and the total wall time.

    Parameters
    ----------
    config : ExperimentConfig
        What to run and where to write it.
    workers : int or None
        Process count; None reads the environment variable and falls
        back to serial.

    Returns
    -------
    list of ResultRecord
        All records in replication order, wall times included.
    """
    get_algorithm(config.algorithm)  # unknown names fail before any work
    workers = resolve_workers(workers)
    jobs = [(config, rep) for rep in range(config.replications)]

    out = Path(config.output_path) if config.output_path else None
    records: list[ResultRecord] = []

    def consume(produced, handle) -> None:
        # producers yield in submission order, so writes are deterministic
        for rep_records in produced:
            records.extend(rep_records)
            if handle:
                for record in rep_records:
                    handle.write(_format_row(record) + "\n")
                handle.flush()

    handle = out.open("w") if out else None
    try:
        if handle:
            handle.write("\n".join(_config_lines(config)) + "\n")
            handle.write(",".join(_COLUMNS) + "\n")
            handle.flush()
        if workers == 1:
            consume(map(_replicate, jobs), handle)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                consume(pool.map(_replicate, jobs), handle)
        if handle:
            handle.write(COMPLETE_MARKER + "\n")
    finally:
        if handle:
            handle.close()

    if out:
        _write_summary(Path(str(out) + ".summary"), config, records)
    return records


def _summary_table(records: list[ResultRecord]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rounds = np.unique([r.round for r in records])
    by_round = {t: [] for t in rounds}
    for record in records:
        by_round[record.round].append(record.cum_regret)
    means = np.array([np.mean(by_round[t]) for t in rounds])
    sds = np.array(
        [np.std(by_round[t], ddof=1) if len(by_round[t]) > 1 else 0.0 for t in rounds]
    )
    return rounds, means, sds


def _write_summary(path: Path, config: ExperimentConfig, records: list[ResultRecord]) -> None:
    rounds, means, sds = _summary_table(records)
    final = [r for r in records if r.round == rounds[-1]]
    mean_batches = float(np.mean([r.batches for r in final]))
    total_wall = float(sum(r.wall_time for r in final))
    with path.open("w") as fh:
        fh.write("\n".join(_config_lines(config)) + "\n")
        fh.write(f"# mean_batches = {repr(mean_batches)}\n")
        fh.write(f"# total_wall_time_s = {repr(total_wall)}\n")
        fh.write("round,mean_cum_regret,sd_cum_regret\n")
        for t, m, s in zip(rounds, means, sds):
            fh.write(f"{int(t)},{repr(float(m))},{repr(float(s))}\n")
        fh.write(COMPLETE_MARKER + "\n")


@dataclass(frozen=True)
class LoadedResults:
    """A parsed result file."""

    path: str
    config: dict
    records: tuple[ResultRecord, ...]
    complete: bool

    @property
    def algorithm(self) -> str:
        return str(self.config.get("algorithm", "?"))


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def load_results(path: str | Path) -> LoadedResults:
    """Parse a result file written by :func:`run_experiment`."""
    config: dict = {}
    records: list[ResultRecord] = []
    complete = False
    saw_header = False
    with Path(path).open() as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line == COMPLETE_MARKER:
                complete = True
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                config[key.strip()] = _parse_value(value.strip())
                continue
            if not saw_header:
                if tuple(line.split(",")) != _COLUMNS:
                    raise ValueError(f"unrecognized column header in {path}: {line!r}")
                saw_header = True
                continue
            rep, seed, rnd, reg, batches = line.split(",")
            records.append(
                ResultRecord(
                    replication=int(rep),
                    seed=int(seed),
                    round=int(rnd),
                    cum_regret=float(reg),
                    batches=int(batches),
                )
            )
    if not saw_header:
        raise ValueError(f"no column header found in {path}")
    return LoadedResults(
        path=str(path), config=config, records=tuple(records), complete=complete
    )


def _config_diff(results: list[LoadedResults]) -> list[str]:
    base = results[0]
    diffs = []
    for other in results[1:]:
        for key in _SHARED_KEYS:
            a, b = base.config.get(key), other.config.get(key)
            if a != b:
                diffs.append(
                    f"{key}: {base.path} has {a!r}, {other.path} has {b!r}"
                )
        a_seeds = {(r.replication, r.seed) for r in base.records}
        b_seeds = {(r.replication, r.seed) for r in other.records}
        if a_seeds != b_seeds:
            diffs.append(
                f"replication seeds differ between {base.path} and {other.path}"
            )
    return diffs


def summarize(paths: list[str | Path]) -> str:
    """Aligned comparison of result files sharing one instance grid.

    Refuses (with a per-key diff) when the files disagree on any of the
    instance-defining keys or on the per-replication seeds; algorithms
    and their parameters are the only things allowed to vary. The
    returned table has one row per checkpoint with mean and standard
    deviation per file, followed by a final-regret ranking.
    """
    if not paths:
        raise ValueError("summarize needs at least one result file")
    results = [load_results(p) for p in paths]
    for res in results:
        if not res.complete:
            raise ValueError(f"result file is incomplete (no completeness marker): {res.path}")
    diffs = _config_diff(results)
    if diffs:
        raise ValueError("result files are not comparable:\n  " + "\n  ".join(diffs))

    names = []
    for i, res in enumerate(results):
        name = res.algorithm
        if name in names:
            name = f"{name}#{i}"
        names.append(name)

    tables = [_summary_table(list(res.records)) for res in results]
    rounds = tables[0][0]
    for (other_rounds, _, _), res in zip(tables, results):
        if not np.array_equal(rounds, other_rounds):
            raise ValueError(f"checkpoint rounds differ in {res.path}")

    header = ["round"]
    for name in names:
        header += [f"{name}_mean", f"{name}_sd"]
    widths = [max(len(h), 12) for h in header]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    for i, t in enumerate(rounds):
        cells = [str(int(t))]
        for _, means, sds in tables:
            cells += [f"{means[i]:.4f}", f"{sds[i]:.4f}"]
        lines.append("  ".join(c.rjust(w) for c, w in zip(cells, widths)))

    finals = []
    for name, (rnds, means, sds), res in zip(names, tables, results):
        final_batches = np.mean(
            [r.batches for r in res.records if r.round == rnds[-1]]
        )
        finals.append((float(means[-1]), float(sds[-1]), float(final_batches), name))
    lines.append("")
    lines.append("final regret ranking:")
    for rank, (mean, sd, batches, name) in enumerate(sorted(finals), start=1):
        lines.append(
            f"  {rank}. {name}: mean {mean:.4f}, sd {sd:.4f}, mean batches {batches:.1f}"
        )
    return "\n".join(lines)

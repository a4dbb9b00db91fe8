"""Privacy/utility sweep over database size and budget."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, TextIO

import numpy as np

from .._parallel import parallel_map
from ..embedding import UtteranceRecord, VoiceprintDatabase
from ..mechanism import check_epsilon, derive_rng
from ..release import build_release_model, release_feature_level, release_model_level
from .attack import mse, reidentification_attack

CSV_COLUMNS = ("n", "epsilon", "trial", "mse", "attack_acc", "feature_online_s", "model_online_s")


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    epsilon: float
    trial: int
    mse: float
    attack_acc: float
    feature_online_s: Optional[float] = None
    model_online_s: Optional[float] = None


def _run_cell(population, n, ni, eps, ei, trial, seed, timing, speaker_of):
    # The subset depends on (n, trial) only, so every budget sees the same
    # databases and the trend across budgets is not masked by subset noise.
    pick = derive_rng(seed, ni, trial, 0)
    sub = population.subset(np.sort(pick.choice(len(population), size=n, replace=False)))
    utts = [UtteranceRecord.from_voiceprint(vp) for vp in sub]

    t0 = time.perf_counter()
    released = release_feature_level(utts, sub, eps, rng=derive_rng(seed, ni, ei, trial), threads=1)
    feature_s = time.perf_counter() - t0

    model_s = None
    if timing:
        model = build_release_model(sub, eps, verify=False, built_at=0.0, threads=1)
        t0 = time.perf_counter()
        release_model_level(utts, model, rng=derive_rng(seed, ni, ei, trial, 1))
        model_s = time.perf_counter() - t0

    released_db = VoiceprintDatabase((r.as_voiceprint() for r in released), dim=sub.dim)
    return ExperimentRow(
        n=n,
        epsilon=eps,
        trial=trial,
        mse=mse(sub, released_db),
        attack_acc=reidentification_attack(sub, released, speaker_of).accuracy,
        feature_online_s=feature_s if timing else None,
        model_online_s=model_s,
    )


def run_experiment_grid(
    population: VoiceprintDatabase,
    n_values: Sequence[int],
    eps_values: Sequence[float],
    trials: int,
    seed: int,
    *,
    timing: bool = True,
    threads: Optional[int] = None,
    speaker_of: Optional[Callable[[str], str]] = None,
) -> list:
    """Release random subsets of ``population`` for every ``(n, epsilon, trial)`` cell.

    Each cell draws its subset and its release uniforms from generators
    derived from ``seed`` and the cell coordinates, so the grid is
    reproducible and independent of ``threads``. Rows come back in
    ``n``-major, then ``epsilon``, then trial order.

    Raises:
        ValueError: if some ``n`` exceeds the population size.
    """
    n_values = [int(n) for n in n_values]
    eps_values = [check_epsilon(e) for e in eps_values]
    for n in n_values:
        if not 1 <= n <= len(population):
            raise ValueError(f"n={n} is outside 1..{len(population)} (population size)")
    cells = [
        (n, ni, eps, ei, t)
        for ni, n in enumerate(n_values)
        for ei, eps in enumerate(eps_values)
        for t in range(max(0, trials))
    ]
    return parallel_map(
        lambda c: _run_cell(population, *c, seed=seed, timing=timing, speaker_of=speaker_of),
        cells,
        threads,
    )


def _fmt(x) -> str:
    return "" if x is None else f"{x:.12g}"


def write_experiment_csv(rows: Sequence[ExperimentRow], stream: TextIO, timing: bool = True) -> None:
    columns = CSV_COLUMNS if timing else CSV_COLUMNS[:5]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        values = [str(r.n), _fmt(r.epsilon), str(r.trial), _fmt(r.mse), _fmt(r.attack_acc)]
        if timing:
            values += [_fmt(r.feature_online_s), _fmt(r.model_online_s)]
        writer.writerow(values)


@dataclass(frozen=True)
class CellSummary:
    n: int
    epsilon: float
    trials: int
    mse_mean: float
    mse_se: float
    acc_mean: float
    acc_se: float


def _mean_se(values):
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def summarize(rows: Sequence[ExperimentRow]) -> dict:
    """Mean and standard error per ``(n, epsilon)`` cell."""
    groups = {}
    for r in rows:
        groups.setdefault((r.n, r.epsilon), []).append(r)
    out = {}
    for key, rs in groups.items():
        m, mse_se = _mean_se([r.mse for r in rs])
        a, acc_se = _mean_se([r.attack_acc for r in rs])
        out[key] = CellSummary(key[0], key[1], len(rs), m, mse_se, a, acc_se)
    return out

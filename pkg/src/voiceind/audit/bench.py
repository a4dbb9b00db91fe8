"""Online perturbation time of the two release pipelines."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

from ..embedding import UtteranceRecord
from ..mechanism import check_epsilon, derive_rng
from ..population import generate_population
from ..release import build_release_model, release_feature_level, release_model_level

DEFAULT_BENCH_DIM = 64
# Model tables are n x n doubles (two of them); cap the enrolled set so the
# largest sizes fit in memory. Online model-level cost does not depend on it.
DEFAULT_MODEL_CAP = 2000


@dataclass(frozen=True)
class BenchRow:
    n: int
    feature_online_s: float
    model_online_s: float
    model_records: int


def _best_of(repeats, fn):
    best = float("inf")
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_perturbation(
    db_sizes: Sequence[int],
    epsilon: float = 1.0,
    seed: int = 0,
    *,
    dim: int = DEFAULT_BENCH_DIM,
    model_cap: int = DEFAULT_MODEL_CAP,
    repeats: int = 1,
    model_repeats: Optional[int] = None,
    threads: Optional[int] = 1,
) -> list:
    """Time feature-level and model-level release of ``n`` utterances.

    For each size ``n`` the feature-level pipeline releases all ``n``
    records of a size-``n`` database against itself, and the model-level
    pipeline serves ``n`` utterances of enrolled records from a prebuilt
    model over ``min(n, model_cap)`` records. Model building is offline and
    excluded from the timing. Each time is the best of ``repeats`` runs;
    ``model_repeats`` (default ``repeats``) overrides that for the much
    shorter, and so noisier, model-level timings.
    """
    sizes = [int(n) for n in db_sizes]
    if sizes != sorted(sizes) or (sizes and sizes[0] < 1):
        raise ValueError("db_sizes must be positive and ascending")
    eps = check_epsilon(epsilon)
    if not sizes:
        return []
    population = generate_population(speakers=sizes[-1], dim=dim, seed=seed)
    rows = []
    for k, n in enumerate(sizes):
        db = population.subset(range(n))
        utts = [UtteranceRecord.from_voiceprint(vp) for vp in db]
        feature_s = _best_of(
            repeats,
            lambda: release_feature_level(utts, db, eps, rng=derive_rng(seed, k, 0), threads=threads),
        )
        m = min(n, model_cap)
        model = build_release_model(db.subset(range(m)), eps, verify=False, built_at=0.0, threads=threads)
        served = [utts[i % m] for i in range(n)]
        model_s = _best_of(
            model_repeats or repeats,
            lambda: release_model_level(served, model, rng=derive_rng(seed, k, 1)),
        )
        rows.append(BenchRow(n, feature_s, model_s, m))
    return rows


def format_bench_table(rows: Sequence[BenchRow]) -> str:
    """Render timings with one column per database size."""
    head = ["Speech database size"] + [f"n = {r.n}" for r in rows]
    feat = ["Feature-level online time"] + [f"{r.feature_online_s:.4f}s" for r in rows]
    model = ["Model-level online time"] + [f"{r.model_online_s:.4f}s" for r in rows]
    table = [head, feat, model]
    widths = [max(len(line[c]) for line in table) for c in range(len(head))]
    return "\n".join(" | ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in table)


def scaling_ratios(rows: Sequence[BenchRow]) -> list:
    """``(n_small, n_large, feature ratio, model ratio)`` for consecutive sizes."""
    out = []
    for a, b in zip(rows, rows[1:]):
        out.append((a.n, b.n, b.feature_online_s / a.feature_online_s, b.model_online_s / a.model_online_s))
    return out

"""Exponential-mechanism perturbation over a voiceprint database.

Given an input embedding ``x0`` and a candidate set ``D``, the mechanism
releases candidate ``x_i`` with probability proportional to
``exp(-epsilon * d(x0, x_i))`` where ``d`` is the angular distance. The
output is always one of the records of ``D``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .embedding import Voiceprint, VoiceprintDatabase
from .metric import distances_to

DEFAULT_SEED = 20200
SEED_ENV = "VOICEIND_SEED"
_U64 = 2**64


@dataclass(frozen=True)
class PrivacyBudget:
    """A privacy budget: finite, non-negative, in units of inverse angular distance."""

    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "epsilon", check_epsilon(self.epsilon))

    def __float__(self):
        return self.epsilon


def check_epsilon(epsilon: Union[float, PrivacyBudget]) -> float:
    if isinstance(epsilon, PrivacyBudget):
        return epsilon.epsilon
    try:
        eps = float(epsilon)
    except (TypeError, ValueError):
        raise ValueError(f"epsilon must be a real number, got {epsilon!r}") from None
    if not math.isfinite(eps) or eps < 0:
        raise ValueError(f"epsilon must be finite and >= 0, got {epsilon!r}")
    return eps


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return check_seed(int(raw)) if raw else DEFAULT_SEED


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < _U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """A PCG64 generator; ``None`` means the package default seed."""
    return np.random.default_rng(check_seed(default_seed() if seed is None else seed))


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a cell ``key`` under a master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(check_seed(seed), spawn_key=tuple(key)))


def exponential_weights(distances: np.ndarray, epsilon: float):
    """Normalized ``exp(-epsilon * d)`` and its logarithm.

    The exponent is shifted by its maximum (the nearest candidate) before
    exponentiating, so very large budgets do not underflow every weight.
    """
    z = -epsilon * np.asarray(distances, dtype=np.float64)
    z = z - z.max()
    w = np.exp(z)
    total = w.sum()
    return w / total, z - math.log(total)


def cumulative(probabilities: np.ndarray) -> np.ndarray:
    """Cumulative table whose last entry is exactly 1.0."""
    c = np.cumsum(probabilities)
    return c / c[-1]


def inverse_cdf(cdf: np.ndarray, u):
    """Index of the first cumulative entry strictly above ``u``.

    Candidate ``i`` owns the half-open interval ``[cdf[i-1], cdf[i])``;
    zero-probability candidates own an empty interval and are never chosen.
    """
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


@dataclass(frozen=True, eq=False)
class PerturbationDistribution:
    """Release probabilities of every candidate for one input embedding.

    ``probabilities`` are positive in exact arithmetic; for extreme budgets
    far candidates may underflow to 0.0 while ``log_probabilities`` stay
    finite.
    """

    candidate_ids: tuple
    probabilities: np.ndarray
    log_probabilities: np.ndarray
    epsilon: float
    center_distance: np.ndarray

    def __len__(self):
        return len(self.candidate_ids)

    @cached_property
    def cdf(self) -> np.ndarray:
        return cumulative(self.probabilities)

    def probability_of(self, candidate_id: str) -> float:
        return float(self.probabilities[self.candidate_ids.index(candidate_id)])


def build_distribution(
    x0: Union[Voiceprint, np.ndarray], db: VoiceprintDatabase, epsilon: Union[float, PrivacyBudget]
) -> PerturbationDistribution:
    """Exponential-mechanism distribution of ``x0`` over the records of ``db``.

    ``x0`` need not belong to ``db``. Candidate order follows the database.

    Raises:
        DimensionMismatchError: if ``x0`` and ``db`` differ in dimension.
        ValueError: on a negative or non-finite budget.
    """
    eps = check_epsilon(epsilon)
    d = distances_to(x0, db)
    p, logp = exponential_weights(d, eps)
    for arr in (p, logp, d):
        arr.setflags(write=False)
    return PerturbationDistribution(db.ids, p, logp, eps, d)


def sample_index(dist: PerturbationDistribution, rng: np.random.Generator) -> int:
    return int(inverse_cdf(dist.cdf, rng.random()))


def sample_indices(dist: PerturbationDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` draws; consumes the same uniforms as ``size`` calls to :func:`sample`."""
    return inverse_cdf(dist.cdf, rng.random(size))


def sample(dist: PerturbationDistribution, rng: np.random.Generator) -> str:
    """Draw one candidate id by inverse CDF on a single uniform."""
    return dist.candidate_ids[sample_index(dist, rng)]


def perturb(
    x0: Union[Voiceprint, np.ndarray],
    db: VoiceprintDatabase,
    epsilon: Union[float, PrivacyBudget],
    rng: np.random.Generator,
) -> Voiceprint:
    """Replace ``x0`` by a record of ``db`` drawn from the mechanism."""
    dist = build_distribution(x0, db, epsilon)
    return db[sample_index(dist, rng)]

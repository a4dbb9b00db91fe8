"""Synthetic speaker populations for experiments.

Each speaker gets a mean direction drawn uniformly on the unit sphere. Each
utterance is that mean plus isotropic Gaussian jitter of expected norm
``1/sqrt(concentration)``, renormalized. Larger concentration means tighter
clusters; ``math.inf`` removes the jitter entirely.
"""

from __future__ import annotations

import math

import numpy as np

from .embedding import DEFAULT_DIM, VoiceprintDatabase
from .mechanism import make_rng

DEFAULT_SPEAKERS = 40
DEFAULT_CONCENTRATION = 20.0


def record_id(speaker: int, utterance: int) -> str:
    return f"spk{speaker:03d}-{utterance:02d}"


def speaker_of(rid: str) -> str:
    """Speaker part of a generated record id (``spk007-03`` -> ``spk007``)."""
    return rid.split("-", 1)[0]


def generate_population(
    speakers: int = DEFAULT_SPEAKERS,
    utterances_per_speaker: int = 1,
    dim: int = DEFAULT_DIM,
    concentration: float = DEFAULT_CONCENTRATION,
    seed=None,
) -> VoiceprintDatabase:
    if speakers < 1 or utterances_per_speaker < 1:
        raise ValueError("speakers and utterances_per_speaker must be >= 1")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if not concentration > 0:
        raise ValueError(f"concentration must be > 0, got {concentration}")
    rng = make_rng(seed)
    scale = 0.0 if math.isinf(concentration) else 1.0 / math.sqrt(concentration * dim)
    ids, rows = [], []
    for s in range(speakers):
        mean = rng.standard_normal(dim)
        while not np.any(mean):
            mean = rng.standard_normal(dim)
        mean /= np.linalg.norm(mean)
        for u in range(utterances_per_speaker):
            v = mean + scale * rng.standard_normal(dim)
            ids.append(record_id(s, u))
            rows.append(v / np.linalg.norm(v))
    return VoiceprintDatabase.from_array(ids, np.vstack(rows))

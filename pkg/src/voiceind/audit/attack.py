"""Re-identification attacker and utility loss."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

import numpy as np

from ..embedding import Voiceprint, VoiceprintDatabase, unit_rows
from ..errors import DimensionMismatchError, UnknownRecordError
from ..release import ProtectedUtterance

_CHUNK = 4096


@dataclass(frozen=True)
class AttackResult:
    trials: int
    correct: int
    label: str = "cosine-nearest-neighbor"

    @property
    def accuracy(self) -> float:
        return self.correct / self.trials if self.trials else 0.0

    def format_text(self) -> str:
        return f"{self.label}: {self.correct}/{self.trials} re-identified, accuracy {self.accuracy:.12g}"


def _released_pairs(released) -> tuple:
    """``(true ids, vectors)`` from utterances, voiceprints, or a database."""
    if isinstance(released, VoiceprintDatabase):
        return list(released.ids), released.matrix
    ids, vecs = [], []
    for item in released:
        if isinstance(item, ProtectedUtterance):
            ids.append(item.id)
            vecs.append(item.released_voiceprint.vector)
        elif isinstance(item, Voiceprint):
            ids.append(item.id)
            vecs.append(item.vector)
        else:
            raise TypeError(f"cannot attack an item of type {type(item).__name__}")
    if not vecs:
        return [], np.zeros((0, 0))
    return ids, np.vstack(vecs)


def nearest_records(original: VoiceprintDatabase, vectors: np.ndarray) -> np.ndarray:
    """Index of the most cosine-similar original record for each row.

    Ties resolve to the lowest record index.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.size == 0:
        return np.zeros(0, dtype=np.intp)
    if vectors.shape[1] != original.dim:
        raise DimensionMismatchError(
            f"released vectors have dimension {vectors.shape[1]}, original database has {original.dim}"
        )
    units = unit_rows(vectors)
    ref = original.unit_matrix
    out = np.empty(len(units), dtype=np.intp)
    for lo in range(0, len(units), _CHUNK):
        sims = units[lo : lo + _CHUNK] @ ref.T
        out[lo : lo + _CHUNK] = np.argmax(sims, axis=1)
    return out


def reidentification_attack(
    original: VoiceprintDatabase,
    released: Union[VoiceprintDatabase, Iterable],
    speaker_of: Optional[Callable[[str], str]] = None,
) -> AttackResult:
    """Closed-set identification of each released voiceprint.

    The attacker knows the original database and guesses, for each released
    vector, the original record with the highest cosine similarity. A guess
    is correct when it names the released item's true id (or, with
    ``speaker_of``, the same speaker).
    """
    ids, vectors = _released_pairs(released)
    guesses = nearest_records(original, vectors)
    key = speaker_of or (lambda rid: rid)
    names = original.ids
    correct = sum(key(names[g]) == key(t) for g, t in zip(guesses, ids))
    return AttackResult(trials=len(ids), correct=int(correct))


def mse(original: VoiceprintDatabase, released: VoiceprintDatabase) -> float:
    """Mean over records of the coordinate-averaged squared error.

    Both sides are unit-normalized first; records are matched by id.
    """
    if set(original.ids) != set(released.ids):
        missing = sorted(set(original.ids) ^ set(released.ids))
        raise UnknownRecordError(f"id sets differ, e.g. {missing[:3]}")
    if original.dim != released.dim:
        raise DimensionMismatchError(f"dimension {original.dim} vs {released.dim}")
    order = [released.index_of(rid) for rid in original.ids]
    a = original.unit_matrix
    b = released.unit_matrix[order]
    diff = a - b
    return float(np.mean(np.einsum("ij,ij->i", diff, diff) / original.dim))

"""Angular distance between voiceprints.

The distance is the angle between two embeddings as a fraction of pi, so it
lives in ``[0, 1]`` and is a true metric on directions. It is evaluated as
``2 * atan2(|u - v|, |u + v|) / pi`` on the unit vectors ``u`` and ``v``,
which equals ``arccos(cos_sim) / pi`` but keeps full relative precision for
nearly parallel or nearly antipodal pairs, where ``arccos`` loses half the
digits.
"""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np

from ._parallel import parallel_map
from .embedding import Voiceprint, VoiceprintDatabase, unit_rows
from .errors import DimensionMismatchError, InvalidVoiceprintError

VectorLike = Union[Voiceprint, np.ndarray]


def _as_vector(x: VectorLike) -> np.ndarray:
    if isinstance(x, Voiceprint):
        return x.vector
    vec = np.asarray(x, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got shape {vec.shape}")
    return vec


def _unit(vec: np.ndarray) -> None:
    if not np.all(np.isfinite(vec)) or not np.any(vec):
        raise InvalidVoiceprintError("angular distance is undefined for a zero or non-finite vector")


def _pair(x: VectorLike, y: VectorLike):
    a, b = _as_vector(x), _as_vector(y)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def cosine_similarity(x: VectorLike, y: VectorLike) -> float:
    """Cosine of the angle between ``x`` and ``y``, clamped to ``[-1, 1]``."""
    a, b = _pair(x, y)
    _unit(a)
    _unit(b)
    ua, ub = unit_rows(np.stack([a, b]))
    c = float(np.dot(ua, ub))
    return min(1.0, max(-1.0, c))


def angular_rows(units: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Angular distances from the unit vector ``u`` to each row of ``units``.

    Both arguments must already be unit-normalized.
    """
    diff = units - u
    plus = units + u
    dn = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    pn = np.sqrt(np.einsum("ij,ij->i", plus, plus))
    return np.arctan2(dn, pn) * (2.0 / math.pi)


def paired_angular_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise angular distance between two ``(m, dim)`` arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(a.any(axis=1)) and np.all(b.any(axis=1))):
        raise InvalidVoiceprintError("angular distance is undefined for a zero or non-finite vector")
    ua, ub = unit_rows(a), unit_rows(b)
    diff = ua - ub
    plus = ua + ub
    dn = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    pn = np.sqrt(np.einsum("ij,ij->i", plus, plus))
    return np.arctan2(dn, pn) * (2.0 / math.pi)


def angular_distance(x: VectorLike, y: VectorLike) -> float:
    """Angular distance ``arccos(cos_sim(x, y)) / pi`` in ``[0, 1]``.

    Scale invariant. Returns exactly 0.0 for the same object or bit-identical
    vectors.
    """
    if x is y:
        _unit(_as_vector(x))
        return 0.0
    a, b = _pair(x, y)
    _unit(a)
    _unit(b)
    if np.array_equal(a, b):
        return 0.0
    ua, ub = unit_rows(np.stack([a, b]))
    return float(angular_rows(ua[None, :], ub)[0])


def distances_to(x0: VectorLike, db: VoiceprintDatabase) -> np.ndarray:
    """Distances from ``x0`` to every record of ``db``, in record order."""
    vec = _as_vector(x0)
    if vec.shape[0] != db.dim:
        raise DimensionMismatchError(f"vector has dimension {vec.shape[0]}, database has {db.dim}")
    _unit(vec)
    return angular_rows(db.unit_matrix, unit_rows(vec[None, :])[0])


def distance_matrix(db: VoiceprintDatabase, threads: Optional[int] = None) -> np.ndarray:
    """All pairwise angular distances of ``db`` as an ``(n, n)`` array.

    Rows may be computed on several threads; each row is an independent
    computation, so the result does not depend on the thread count. The
    upper triangle is mirrored to make the matrix exactly symmetric and the
    diagonal is exactly zero.
    """
    units = db.unit_matrix
    n = len(db)
    rows = parallel_map(lambda i: angular_rows(units, units[i]), range(n), threads)
    mat = np.vstack(rows) if n else np.zeros((0, 0))
    upper = np.triu(mat, 1)
    mat = upper + upper.T
    return mat

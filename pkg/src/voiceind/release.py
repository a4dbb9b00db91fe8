"""Feature-level and model-level release pipelines.

Both pipelines replace each utterance's voiceprint with a record of the
release database drawn by the exponential mechanism, then hand the content
and the replacement voiceprint to a synthesizer.

* Feature-level: the distribution is rebuilt online for every utterance,
  costing one distance evaluation per candidate (quadratic over a whole
  database).
* Model-level: the per-record sampling tables are computed once, offline, in
  a :class:`ReleaseModel`; serving an utterance is a table lookup and one
  uniform draw. Only enrolled records can be served.

Every utterance consumes exactly one uniform from the generator, drawn up
front in input order, so results do not depend on the worker count, and the
two pipelines produce identical releases from the same seed.
"""

from __future__ import annotations

import io
import struct
import time
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence, Union

import numpy as np

from ._parallel import chunk_bounds, parallel_map, resolve_threads
from .embedding import UtteranceRecord, Voiceprint, VoiceprintDatabase
from .errors import DimensionMismatchError, SynthesisError, UnknownRecordError, VoiceIndError
from .mechanism import (
    PrivacyBudget,
    build_distribution,
    check_epsilon,
    cumulative,
    exponential_weights,
    inverse_cdf,
)
from .metric import distance_matrix


class Synthesizer(Protocol):
    def synthesize(self, content: bytes, voiceprint: Voiceprint) -> bytes:
        """Render ``content`` in the voice described by ``voiceprint``."""


class PassthroughSynthesizer:
    """Returns the content unchanged; the voiceprint travels alongside it."""

    def synthesize(self, content: bytes, voiceprint: Voiceprint) -> bytes:
        return content


@dataclass(frozen=True, eq=False)
class ProtectedUtterance:
    id: str
    content: bytes
    released_voiceprint: Voiceprint
    source_candidate_id: str
    probability: float

    def as_voiceprint(self) -> Voiceprint:
        """The released vector under the utterance id."""
        return Voiceprint(self.id, self.released_voiceprint.vector)


def _synthesize_all(utterances, db, choices, probs, synthesizer):
    synthesizer = synthesizer or PassthroughSynthesizer()
    out = []
    for utt, idx, prob in zip(utterances, choices, probs):
        released = db[int(idx)]
        try:
            content = synthesizer.synthesize(utt.content, released)
        except Exception as exc:
            raise SynthesisError(utt.id, exc) from exc
        out.append(ProtectedUtterance(utt.id, bytes(content), released, released.id, float(prob)))
    return out


def _first_occurrences(utterances, sticky):
    """Positions that need a fresh draw, and for each utterance the position it copies."""
    if not sticky:
        idx = list(range(len(utterances)))
        return idx, idx
    first = {}
    owner = []
    for i, utt in enumerate(utterances):
        owner.append(first.setdefault(utt.voiceprint.id, i))
    return sorted(set(first.values())), owner


def release_feature_level(
    utterances: Sequence[UtteranceRecord],
    db: VoiceprintDatabase,
    epsilon: Union[float, PrivacyBudget],
    synthesizer: Optional[Synthesizer] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    sticky: bool = False,
    threads: Optional[int] = None,
) -> list:
    """Perturb each utterance online against ``db``.

    For every utterance the full distribution over all candidates is built
    from scratch, then one candidate is drawn by inverse CDF.

    Args:
        utterances: Utterances to protect. Their voiceprints need not be
            members of ``db``.
        db: Release database; every output voiceprint is one of its records.
        epsilon: Privacy budget.
        synthesizer: Defaults to :class:`PassthroughSynthesizer`.
        rng: Source of the per-utterance uniforms.
        sticky: Reuse the first draw for every later utterance sharing a
            voiceprint id.
        threads: Worker threads for the distance computations.

    Returns:
        One :class:`ProtectedUtterance` per input, in input order.
    """
    eps = check_epsilon(epsilon)
    utterances = list(utterances)
    for utt in utterances:
        if utt.voiceprint.dim != db.dim:
            raise DimensionMismatchError(
                f"utterance {utt.id!r} has dimension {utt.voiceprint.dim}, database has {db.dim}"
            )
    if rng is None:
        rng = np.random.default_rng()
    uniforms = rng.random(len(utterances))
    fresh, owner = _first_occurrences(utterances, sticky)

    def draw(span):
        picks = []
        for pos in fresh[span[0] : span[1]]:
            dist = build_distribution(utterances[pos].voiceprint, db, eps)
            k = int(inverse_cdf(dist.cdf, uniforms[pos]))
            picks.append((pos, k, dist.probabilities[k]))
        return picks

    spans = chunk_bounds(len(fresh), resolve_threads(threads)) if fresh else []
    chosen = {}
    for picks in parallel_map(draw, spans, threads):
        for pos, k, p in picks:
            chosen[pos] = (k, p)
    choices = [chosen[owner[i]][0] for i in range(len(utterances))]
    probs = [chosen[owner[i]][1] for i in range(len(utterances))]
    return _synthesize_all(utterances, db, choices, probs, synthesizer)


# -- model-level -------------------------------------------------------------

MODEL_MAGIC = b"VIRM"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


class ReleaseModel:
    """Precomputed sampling tables, one per enrolled record.

    Row ``i`` of :attr:`probabilities` is exactly the output of
    ``build_distribution(db[i], db, epsilon)``; :attr:`cdf` holds the
    matching cumulative tables used online.
    """

    def __init__(self, db: VoiceprintDatabase, epsilon: float, probabilities, cdf, built_at: float = 0.0):
        n = len(db)
        probabilities = np.ascontiguousarray(probabilities, dtype=np.float64)
        cdf = np.ascontiguousarray(cdf, dtype=np.float64)
        if probabilities.shape != (n, n) or cdf.shape != (n, n):
            raise ValueError(f"tables must be {n}x{n}")
        probabilities.setflags(write=False)
        cdf.setflags(write=False)
        self.db = db
        self.epsilon = check_epsilon(epsilon)
        self.probabilities = probabilities
        self.cdf = cdf
        self.built_at = float(built_at)

    def __len__(self):
        return len(self.db)

    def table(self, record_id: str) -> np.ndarray:
        return self.probabilities[self.db.index_of(record_id)]

    def verify(self, atol: float = 1e-12, threads: Optional[int] = None) -> float:
        """Check every table against a recomputation from the distance matrix.

        Returns the largest absolute deviation; raises ``AssertionError``
        when it exceeds ``atol``.
        """
        dm = distance_matrix(self.db, threads)
        worst = 0.0
        for i in range(len(self.db)):
            p, _ = exponential_weights(dm[i], self.epsilon)
            worst = max(worst, float(np.max(np.abs(p - self.probabilities[i]))))
        if worst > atol:
            raise AssertionError(f"release model tables deviate by {worst:.3e} > {atol:.1e}")
        return worst

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.write(buf)
        return buf.getvalue()

    def write(self, stream) -> None:
        n, dim = len(self.db), self.db.dim
        stream.write(_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, dim, n, self.epsilon, self.built_at))
        for vid in self.db.ids:
            raw = vid.encode("utf-8")
            stream.write(struct.pack("<I", len(raw)))
            stream.write(raw)
        for arr in (self.db.matrix, self.probabilities, self.cdf):
            stream.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            self.write(fh)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ReleaseModel":
        return cls.read(io.BytesIO(data))

    @classmethod
    def read(cls, stream) -> "ReleaseModel":
        def take(k):
            chunk = stream.read(k)
            if len(chunk) != k:
                raise VoiceIndError("truncated release model file")
            return chunk

        magic, version, dim, n, eps, built_at = _HEADER.unpack(take(_HEADER.size))
        if magic != MODEL_MAGIC:
            raise VoiceIndError("not a release model file (bad magic)")
        if version != MODEL_VERSION:
            raise VoiceIndError(f"unsupported release model version {version}")
        ids = []
        for _ in range(n):
            (length,) = struct.unpack("<I", take(4))
            ids.append(take(length).decode("utf-8"))
        vectors = np.frombuffer(take(8 * n * dim), dtype="<f8").reshape(n, dim)
        probs = np.frombuffer(take(8 * n * n), dtype="<f8").reshape(n, n)
        cdf = np.frombuffer(take(8 * n * n), dtype="<f8").reshape(n, n)
        if stream.read(1):
            raise VoiceIndError("trailing bytes after release model tables")
        db = VoiceprintDatabase.from_array(ids, vectors)
        return cls(db, eps, probs.astype(np.float64), cdf.astype(np.float64), built_at)

    @classmethod
    def load(cls, path) -> "ReleaseModel":
        with open(path, "rb") as fh:
            return cls.read(fh)


def build_release_model(
    db: VoiceprintDatabase,
    epsilon: Union[float, PrivacyBudget],
    *,
    verify: bool = True,
    built_at: Optional[float] = None,
    threads: Optional[int] = None,
) -> ReleaseModel:
    """Offline phase: one sampling table per record, ``O(n^2)`` work.

    ``built_at`` defaults to the current time; pass a fixed value for
    byte-reproducible model files.
    """
    eps = check_epsilon(epsilon)
    n = len(db)

    def row(i):
        return build_distribution(db[i], db, eps).probabilities

    probs = np.vstack(parallel_map(row, range(n), threads))
    cdf = np.vstack([cumulative(p) for p in probs])
    model = ReleaseModel(db, eps, probs, cdf, time.time() if built_at is None else built_at)
    if verify:
        model.verify(threads=threads)
    return model


def release_model_level(
    utterances: Sequence[UtteranceRecord],
    model: ReleaseModel,
    synthesizer: Optional[Synthesizer] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    sticky: bool = False,
) -> list:
    """Serve utterances of enrolled records from precomputed tables.

    No distance is computed online. An utterance whose id is not enrolled in
    the model raises :class:`UnknownRecordError`.
    """
    utterances = list(utterances)
    db = model.db
    rows = []
    for utt in utterances:
        if utt.id not in db:
            raise UnknownRecordError(
                f"utterance {utt.id!r} is not enrolled in the release model; "
                "use the feature-level pipeline for unseen speakers"
            )
        if utt.voiceprint.dim != db.dim:
            raise DimensionMismatchError(
                f"utterance {utt.id!r} has dimension {utt.voiceprint.dim}, model has {db.dim}"
            )
        rows.append(db.index_of(utt.id))
    if rng is None:
        rng = np.random.default_rng()
    uniforms = rng.random(len(utterances))
    fresh, owner = _first_occurrences(utterances, sticky)
    chosen = {}
    for pos in fresh:
        i = rows[pos]
        k = int(inverse_cdf(model.cdf[i], uniforms[pos]))
        chosen[pos] = (k, model.probabilities[i, k])
    choices = [chosen[owner[j]][0] for j in range(len(utterances))]
    probs = [chosen[owner[j]][1] for j in range(len(utterances))]
    return _synthesize_all(utterances, db, choices, probs, synthesizer)


def release_database(
    db: VoiceprintDatabase,
    epsilon: Union[float, PrivacyBudget],
    rng: Optional[np.random.Generator] = None,
    *,
    threads: Optional[int] = None,
) -> VoiceprintDatabase:
    """Perturb every record of ``db`` independently against ``db`` itself.

    The result has the same ids in the same order; record ``i`` carries the
    vector of the candidate drawn for ``x_i``.
    """
    released = release_feature_level(
        [UtteranceRecord.from_voiceprint(vp) for vp in db], db, epsilon, rng=rng, threads=threads
    )
    return VoiceprintDatabase((r.as_voiceprint() for r in released), dim=db.dim)

"""Voiceprint data model and the plain-text embedding format.

One record per line::

    <id><sep><c1><sep>...<sep><cdim>

where ``sep`` is any run of spaces, tabs or commas. Lines starting with ``#``
are comments. An optional header comment ``#voiceprints n=<n> dim=<dim>`` is
validated against the records that follow it.

Utterance content lives in a sidecar file, one ``<id>\\t<base64 payload>``
line per utterance.
"""

from __future__ import annotations

import base64
import binascii
import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence, TextIO

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    EmbeddingFormatError,
    InvalidVoiceprintError,
    UnknownRecordError,
)

DEFAULT_DIM = 512

_SEP = re.compile(r"[,\s]+")
_DECIMAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NON_FINITE = {"nan", "+nan", "-nan", "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity"}
_HEADER = re.compile(r"#voiceprints\s+n=(\d+)\s+dim=(\d+)\s*$")


def _frozen_vector(values) -> np.ndarray:
    vec = np.array(values, dtype=np.float64)
    if vec.ndim != 1:
        raise InvalidVoiceprintError(f"voiceprint vector must be 1-D, got shape {vec.shape}")
    vec.setflags(write=False)
    return vec


def _check_vector(vec: np.ndarray, vid: str) -> None:
    if vec.size == 0:
        raise InvalidVoiceprintError(f"voiceprint {vid!r} has no coordinates")
    if not np.all(np.isfinite(vec)):
        raise InvalidVoiceprintError(f"voiceprint {vid!r} has a non-finite coordinate")
    if not np.any(vec):
        raise InvalidVoiceprintError(f"voiceprint {vid!r} is the zero vector")


@dataclass(frozen=True, eq=False)
class Voiceprint:
    """An identified speaker embedding.

    The vector is stored as a read-only float64 array. Raw (non unit-norm)
    vectors are kept as given.
    """

    id: str
    vector: np.ndarray

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id or _SEP.search(self.id):
            raise InvalidVoiceprintError(f"invalid voiceprint id {self.id!r}")
        vec = _frozen_vector(self.vector)
        _check_vector(vec, self.id)
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Voiceprint):
            return NotImplemented
        return self.id == other.id and np.array_equal(self.vector, other.vector)

    __hash__ = None

    def __repr__(self):
        return f"Voiceprint(id={self.id!r}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class UtteranceRecord:
    """An utterance: opaque content payload plus its voiceprint."""

    id: str
    content: bytes
    voiceprint: Voiceprint

    def __post_init__(self):
        if self.id != self.voiceprint.id:
            raise InvalidVoiceprintError(
                f"utterance id {self.id!r} does not match voiceprint id {self.voiceprint.id!r}"
            )
        object.__setattr__(self, "content", bytes(self.content))

    @classmethod
    def from_voiceprint(cls, vp: Voiceprint, content: bytes = b"") -> "UtteranceRecord":
        return cls(vp.id, content, vp)


class VoiceprintDatabase:
    """An ordered, immutable set of voiceprints sharing one dimension.

    Besides the records, the database keeps a stacked ``(n, dim)`` matrix of
    the raw vectors and of their unit-normalized directions; both are
    read-only.
    """

    __slots__ = ("_records", "_dim", "_index", "_matrix", "_unit")

    def __init__(self, records: Iterable[Voiceprint], dim: Optional[int] = None):
        records = tuple(records)
        if not records:
            raise InvalidVoiceprintError("a voiceprint database needs at least one record")
        if dim is None:
            dim = records[0].dim
        if dim < 1:
            raise InvalidVoiceprintError(f"dimension must be >= 1, got {dim}")
        index = {}
        for i, rec in enumerate(records):
            if rec.dim != dim:
                raise DimensionMismatchError(
                    f"record {rec.id!r} has dimension {rec.dim}, database dimension is {dim}"
                )
            if rec.id in index:
                raise DuplicateIdError(f"duplicate voiceprint id {rec.id!r}")
            index[rec.id] = i
        matrix = np.stack([rec.vector for rec in records])
        matrix.setflags(write=False)
        self._records = records
        self._dim = int(dim)
        self._index = index
        self._matrix = matrix
        self._unit = unit_rows(matrix)
        self._unit.setflags(write=False)

    @classmethod
    def from_array(cls, ids: Sequence[str], vectors) -> "VoiceprintDatabase":
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or len(ids) != vectors.shape[0]:
            raise DimensionMismatchError("ids and vector rows must line up")
        return cls((Voiceprint(i, v) for i, v in zip(ids, vectors)), dim=vectors.shape[1])

    @property
    def records(self) -> tuple:
        return self._records

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def ids(self) -> tuple:
        return tuple(rec.id for rec in self._records)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def unit_matrix(self) -> np.ndarray:
        return self._unit

    def __len__(self):
        return len(self._records)

    def __iter__(self) -> Iterator[Voiceprint]:
        return iter(self._records)

    def __getitem__(self, i) -> Voiceprint:
        return self._records[i]

    def __contains__(self, vid) -> bool:
        return vid in self._index

    def index_of(self, vid: str) -> int:
        try:
            return self._index[vid]
        except KeyError:
            raise UnknownRecordError(f"no record with id {vid!r}") from None

    def get(self, vid: str) -> Voiceprint:
        return self._records[self.index_of(vid)]

    def subset(self, indices) -> "VoiceprintDatabase":
        return VoiceprintDatabase((self._records[i] for i in indices), dim=self._dim)

    def __eq__(self, other):
        if not isinstance(other, VoiceprintDatabase):
            return NotImplemented
        return self.ids == other.ids and np.array_equal(self._matrix, other._matrix)

    __hash__ = None

    def __repr__(self):
        return f"VoiceprintDatabase(n={len(self)}, dim={self._dim})"


def unit_rows(matrix: np.ndarray) -> np.ndarray:
    """Divide each row by its Euclidean norm.

    Rows are first scaled by their largest magnitude so tiny or huge
    coordinates neither underflow nor overflow the squared norm.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = matrix / np.max(np.abs(matrix), axis=1, keepdims=True)
        norms = np.sqrt(np.einsum("ij,ij->i", scaled, scaled))
        return scaled / norms[:, None]


def normalize(v: Voiceprint) -> Voiceprint:
    """Return ``v`` scaled to unit Euclidean norm, keeping its id."""
    vec = np.asarray(v.vector, dtype=np.float64)
    if not np.any(vec):
        raise InvalidVoiceprintError(f"cannot normalize zero vector {v.id!r}")
    unit = unit_rows(vec[None, :])[0]
    # A second pass absorbs the rounding of the first.
    unit = unit / math.sqrt(float(np.dot(unit, unit)))
    return Voiceprint(v.id, unit)


# -- text format -------------------------------------------------------------


def _parse_coordinate(tok: str, lineno, source) -> float:
    if tok.lower() in _NON_FINITE:
        raise EmbeddingFormatError(f"non-finite coordinate {tok!r}", lineno, source)
    if not _DECIMAL.fullmatch(tok):
        raise EmbeddingFormatError(f"malformed number {tok!r}", lineno, source)
    value = float(tok)
    if not math.isfinite(value):
        raise EmbeddingFormatError(f"coordinate {tok!r} overflows a double", lineno, source)
    return value


def parse_voiceprint(
    line: str, dim: Optional[int] = None, lineno: Optional[int] = None, source: Optional[str] = None
) -> Voiceprint:
    """Parse one ``id c1 ... cdim`` record.

    Args:
        line: The text record. Separators may be spaces, tabs or commas.
        dim: Expected coordinate count; ``None`` accepts any positive count.
        lineno: Line number used in error messages.
        source: File name used in error messages.

    Returns:
        The parsed voiceprint.

    Raises:
        EmbeddingFormatError: On an empty id, a malformed or non-finite
            number, a wrong coordinate count, or an all-zero vector.
    """
    tokens = _SEP.split(line.strip())
    if not tokens or not tokens[0]:
        raise EmbeddingFormatError("empty id", lineno, source)
    vid, coords = tokens[0], tokens[1:]
    if coords and coords[-1] == "":
        coords = coords[:-1]
    if not coords:
        raise EmbeddingFormatError(f"record {vid!r} has no coordinates", lineno, source)
    if dim is not None and len(coords) != dim:
        raise EmbeddingFormatError(
            f"record {vid!r} has {len(coords)} coordinates, expected {dim}", lineno, source
        )
    values = [_parse_coordinate(tok, lineno, source) for tok in coords]
    try:
        return Voiceprint(vid, values)
    except InvalidVoiceprintError as exc:
        raise EmbeddingFormatError(str(exc), lineno, source) from None


def format_number(x: float, precision: Optional[int] = None) -> str:
    """Shortest round-trip repr when ``precision`` is None, else ``%.{p}g``."""
    x = float(x)
    if precision is None:
        return repr(x)
    return f"{x:.{precision}g}"


def format_voiceprint(v: Voiceprint, precision: Optional[int] = None, sep: str = " ") -> str:
    return sep.join([v.id] + [format_number(c, precision) for c in v.vector])


def iter_voiceprints(source: TextIO, dim: Optional[int] = None, name: Optional[str] = None):
    """Yield ``(lineno, Voiceprint)`` pairs, honoring an optional header.

    A header, if present, fixes ``dim`` and the expected record count; the
    count is checked when the stream is exhausted.
    """
    expected_n = None
    seen = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _HEADER.match(line)
            if m:
                if seen or expected_n is not None:
                    raise EmbeddingFormatError("header must precede all records", lineno, name)
                expected_n, header_dim = int(m.group(1)), int(m.group(2))
                if dim is not None and header_dim != dim:
                    raise EmbeddingFormatError(
                        f"header dim {header_dim} disagrees with requested dim {dim}", lineno, name
                    )
                dim = header_dim
            continue
        vp = parse_voiceprint(line, dim, lineno, name)
        seen += 1
        yield lineno, vp
    if expected_n is not None and seen != expected_n:
        raise EmbeddingFormatError(f"header declares n={expected_n} but found {seen} records", None, name)


def load_database(source: TextIO, dim: Optional[int] = None, name: Optional[str] = None) -> VoiceprintDatabase:
    """Read a voiceprint database from a text stream.

    ``dim=None`` infers the dimension from the header or the first record.
    Every record must then match it. Record order is preserved.
    """
    if name is None:
        name = getattr(source, "name", None)
    records = []
    seen = {}
    for lineno, vp in iter_voiceprints(source, dim, name):
        if dim is None:
            dim = vp.dim
        elif vp.dim != dim:
            raise EmbeddingFormatError(
                f"dimension mismatch: record {vp.id!r} has {vp.dim} coordinates, expected {dim}",
                lineno,
                name,
            )
        if vp.id in seen:
            raise EmbeddingFormatError(
                f"duplicate id {vp.id!r} (first seen on line {seen[vp.id]})", lineno, name
            )
        seen[vp.id] = lineno
        records.append(vp)
    if not records:
        raise EmbeddingFormatError("empty stream: no voiceprint records", None, name)
    return VoiceprintDatabase(records, dim)


def read_database(path, dim: Optional[int] = None) -> VoiceprintDatabase:
    with open(path, encoding="utf-8") as fh:
        return load_database(fh, dim, name=str(path))


def write_voiceprints(
    records: Iterable[Voiceprint], stream: TextIO, precision: Optional[int] = None, header: bool = True
) -> None:
    records = list(records)
    if header and records:
        stream.write(f"#voiceprints n={len(records)} dim={records[0].dim}\n")
    for vp in records:
        stream.write(format_voiceprint(vp, precision))
        stream.write("\n")


def write_database(db: VoiceprintDatabase, stream: TextIO, precision: Optional[int] = None, header: bool = True):
    write_voiceprints(db.records, stream, precision, header)


# -- utterance sidecar -------------------------------------------------------


def load_content(source: TextIO, name: Optional[str] = None) -> dict:
    """Read an ``id<TAB>base64`` sidecar into ``{id: bytes}``."""
    contents = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        uid, tab, payload = line.partition("\t")
        if not tab or not uid:
            raise EmbeddingFormatError("expected '<id>\\t<base64>'", lineno, name)
        if uid in contents:
            raise EmbeddingFormatError(f"duplicate content id {uid!r}", lineno, name)
        try:
            contents[uid] = base64.b64decode(payload.strip(), validate=True)
        except binascii.Error as exc:
            raise EmbeddingFormatError(f"bad base64 payload: {exc}", lineno, name) from None
    return contents


def write_content(items: Iterable[tuple], stream: TextIO) -> None:
    for uid, content in items:
        stream.write(f"{uid}\t{base64.b64encode(content).decode('ascii')}\n")


def make_utterances(voiceprints: Iterable[Voiceprint], contents: Optional[Mapping[str, bytes]] = None) -> list:
    contents = contents or {}
    return [UtteranceRecord(vp.id, contents.get(vp.id, b""), vp) for vp in voiceprints]

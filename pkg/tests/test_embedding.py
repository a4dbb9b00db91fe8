import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from voiceind import (
    EmbeddingFormatError,
    InvalidVoiceprintError,
    UtteranceRecord,
    Voiceprint,
    VoiceprintDatabase,
    load_database,
    normalize,
    parse_voiceprint,
)
from voiceind.embedding import (
    format_voiceprint,
    load_content,
    make_utterances,
    write_content,
    write_database,
)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
vectors = st.lists(finite, min_size=1, max_size=16).filter(lambda v: any(v))


class TestParse:
    def test_simple_record(self):
        vp = parse_voiceprint("a 1.0 0.0 0.0", dim=3)
        assert vp.id == "a"
        np.testing.assert_array_equal(vp.vector, [1.0, 0.0, 0.0])

    def test_comma_and_mixed_separators(self):
        vp = parse_voiceprint("a,1.5, -2e-3\t4", dim=3)
        np.testing.assert_array_equal(vp.vector, [1.5, -0.002, 4.0])

    def test_zero_vector_rejected(self):
        with pytest.raises(EmbeddingFormatError, match="zero vector"):
            parse_voiceprint("b 0 0 0")

    @pytest.mark.parametrize("tok", ["NaN", "inf", "-Infinity"])
    def test_non_finite_rejected(self, tok):
        with pytest.raises(EmbeddingFormatError, match="non-finite"):
            parse_voiceprint(f"c 1.0 {tok} 0.0")

    @pytest.mark.parametrize("tok", ["1.0.0", "abc", "1_0", "0x10", "--1"])
    def test_malformed_number(self, tok):
        with pytest.raises(EmbeddingFormatError, match="malformed"):
            parse_voiceprint(f"c 1.0 {tok}", lineno=7)

    def test_error_carries_line_position(self):
        with pytest.raises(EmbeddingFormatError) as exc:
            parse_voiceprint("c 1.0 x", lineno=7, source="f.txt")
        assert exc.value.lineno == 7
        assert str(exc.value).startswith("f.txt:7:")

    def test_wrong_count(self):
        with pytest.raises(EmbeddingFormatError, match="expected 3"):
            parse_voiceprint("a 1 2", dim=3)

    @pytest.mark.parametrize("line", ["", ",1,2", "   "])
    def test_empty_id(self, line):
        with pytest.raises(EmbeddingFormatError, match="empty id"):
            parse_voiceprint(line)

    def test_full_precision_kept(self):
        x = 0.1 + 0.2
        vp = parse_voiceprint(f"a {x!r} 1")
        assert vp.vector[0] == x

    @given(vectors)
    def test_round_trip_exact(self, values):
        vp = Voiceprint("id-1", values)
        back = parse_voiceprint(format_voiceprint(vp))
        assert back.id == vp.id
        np.testing.assert_array_equal(back.vector, vp.vector)

    @given(vectors)
    def test_round_trip_fixed_precision_is_stable(self, values):
        vp = Voiceprint("k", values)
        once = parse_voiceprint(format_voiceprint(vp, 12))
        twice = parse_voiceprint(format_voiceprint(once, 12))
        np.testing.assert_array_equal(once.vector, twice.vector)
        np.testing.assert_allclose(once.vector, vp.vector, rtol=1e-11)


class TestVoiceprint:
    def test_vector_is_read_only(self):
        vp = Voiceprint("a", [1.0, 2.0])
        with pytest.raises(ValueError):
            vp.vector[0] = 3.0

    def test_source_list_not_aliased(self):
        src = np.array([1.0, 2.0])
        vp = Voiceprint("a", src)
        src[0] = 9.0
        assert vp.vector[0] == 1.0

    @pytest.mark.parametrize("vid", ["", "a b", "a,b"])
    def test_bad_ids(self, vid):
        with pytest.raises(InvalidVoiceprintError):
            Voiceprint(vid, [1.0])

    def test_equality(self):
        assert Voiceprint("a", [1, 2]) == Voiceprint("a", [1.0, 2.0])
        assert Voiceprint("a", [1, 2]) != Voiceprint("b", [1, 2])


class TestNormalize:
    def test_three_four_five(self):
        np.testing.assert_allclose(normalize(Voiceprint("v", [3, 4])).vector, [0.6, 0.8], atol=1e-15)

    def test_unit_is_fixed(self):
        np.testing.assert_array_equal(normalize(Voiceprint("v", [1, 0, 0])).vector, [1, 0, 0])

    def test_random_unit_norm(self, rng):
        for _ in range(1000):
            dim = int(rng.integers(1, 600))
            v = rng.standard_normal(dim) * 10 ** rng.uniform(-8, 8)
            u = normalize(Voiceprint("v", v))
            assert abs(np.linalg.norm(u.vector) - 1.0) <= 1e-12
            # same direction: positive multiple
            np.testing.assert_allclose(u.vector * np.linalg.norm(v), v, rtol=1e-9, atol=1e-300)

    @given(vectors)
    def test_idempotent(self, values):
        u = normalize(Voiceprint("v", values))
        np.testing.assert_allclose(normalize(u).vector, u.vector, atol=1e-12, rtol=0)

    def test_zero_rejected_on_construction(self):
        with pytest.raises(InvalidVoiceprintError):
            Voiceprint("v", [0.0, 0.0])


DB_TEXT = """\
# three speakers
a 1 0 0
b,0,1,0
c 0 0 1
"""


class TestLoadDatabase:
    def test_three_lines(self):
        db = load_database(io.StringIO(DB_TEXT))
        assert len(db) == 3 and db.dim == 3
        assert db.ids == ("a", "b", "c")

    def test_duplicate_id_named(self):
        with pytest.raises(EmbeddingFormatError, match="duplicate id 'a'") as exc:
            load_database(io.StringIO("a 1 0\nb 0 1\na 1 1\n"))
        assert exc.value.lineno == 3

    def test_dimension_mismatch(self):
        with pytest.raises(EmbeddingFormatError, match="dimension mismatch"):
            load_database(io.StringIO("a 1 0 0\nb 1 0 0 0\n"))

    def test_requested_dim(self):
        with pytest.raises(EmbeddingFormatError, match="expected 4"):
            load_database(io.StringIO(DB_TEXT), dim=4)

    def test_empty_stream(self):
        with pytest.raises(EmbeddingFormatError, match="empty"):
            load_database(io.StringIO("# nothing\n\n"))

    def test_header_validated(self):
        good = "#voiceprints n=2 dim=2\na 1 0\nb 0 1\n"
        assert len(load_database(io.StringIO(good))) == 2
        with pytest.raises(EmbeddingFormatError, match="declares n=3"):
            load_database(io.StringIO("#voiceprints n=3 dim=2\na 1 0\nb 0 1\n"))
        with pytest.raises(EmbeddingFormatError, match="expected 3"):
            load_database(io.StringIO("#voiceprints n=1 dim=3\na 1 0\n"))

    def test_write_then_load_is_identity(self, rng):
        db = VoiceprintDatabase.from_array(["x", "y", "z"], rng.standard_normal((3, 5)))
        buf = io.StringIO()
        write_database(db, buf)
        assert load_database(io.StringIO(buf.getvalue())) == db

    def test_database_invariants(self):
        with pytest.raises(InvalidVoiceprintError):
            VoiceprintDatabase([])
        db = load_database(io.StringIO(DB_TEXT))
        assert db.index_of("c") == 2 and "b" in db and "q" not in db
        with pytest.raises(LookupError, match="'q'"):
            db.get("q")
        assert not db.matrix.flags.writeable
        np.testing.assert_allclose(np.linalg.norm(db.unit_matrix, axis=1), 1.0)


class TestUtterances:
    def test_id_must_match(self):
        with pytest.raises(InvalidVoiceprintError):
            UtteranceRecord("u1", b"", Voiceprint("u2", [1.0]))

    def test_content_sidecar_round_trip(self):
        payloads = [("a", b"\x00\x01fbank"), ("b", b"")]
        buf = io.StringIO()
        write_content(payloads, buf)
        assert load_content(io.StringIO(buf.getvalue())) == dict(payloads)

    def test_sidecar_errors(self):
        with pytest.raises(EmbeddingFormatError, match="base64"):
            load_content(io.StringIO("a\t!!!\n"))
        with pytest.raises(EmbeddingFormatError):
            load_content(io.StringIO("no-tab-here\n"))

    def test_missing_content_is_empty(self):
        db = load_database(io.StringIO(DB_TEXT))
        utts = make_utterances(db, {"b": b"xyz"})
        assert [u.content for u in utts] == [b"", b"xyz", b""]

import numpy as np
import pytest

from voiceind import UnknownRecordError, UtteranceRecord, Voiceprint, VoiceprintDatabase
from voiceind.audit import mse, nearest_records, reidentification_attack
from voiceind.mechanism import make_rng
from voiceind.release import release_database, release_feature_level

from conftest import basis_db, random_db


def test_original_is_fully_identified(rng):
    db = random_db(rng, 25, 8)
    res = reidentification_attack(db, db)
    assert res.accuracy == 1.0 and res.trials == 25


def test_large_budget_release_is_identified(rng):
    db = random_db(rng, 20, 16)
    out = release_database(db, 1e4, make_rng(0))
    assert reidentification_attack(db, out).accuracy == 1.0


def test_zero_budget_is_chance(rng):
    n, rounds = 10, 2000
    db = random_db(rng, n, 8)
    utts = [UtteranceRecord.from_voiceprint(vp) for vp in db] * rounds
    out = release_feature_level(utts, db, 0.0, rng=make_rng(1))
    acc = reidentification_attack(db, out).accuracy
    sigma = np.sqrt((1 / n) * (1 - 1 / n) / (n * rounds))
    assert abs(acc - 1 / n) < 3 * sigma


def test_ties_go_to_lowest_index():
    db = VoiceprintDatabase.from_array(["a", "b", "c"], [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert list(nearest_records(db, np.array([[2.0, 0.0], [0.0, 3.0]]))) == [0, 2]


def test_accepts_voiceprints_and_speaker_key():
    db = VoiceprintDatabase.from_array(["s1-a", "s1-b", "s2-a"], [[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
    released = [Voiceprint("s1-b", [1.0, 0.0]), Voiceprint("s2-a", [0.0, 1.0])]
    assert reidentification_attack(db, released).correct == 1
    assert reidentification_attack(db, released, lambda r: r.split("-")[0]).correct == 2


def test_empty_and_bad_items(rng):
    db = random_db(rng, 3, 2)
    assert reidentification_attack(db, []).accuracy == 0.0
    with pytest.raises(TypeError):
        reidentification_attack(db, [object()])


class TestMse:
    def test_identity_is_zero(self, rng):
        db = random_db(rng, 5, 4)
        assert mse(db, db) == 0.0

    def test_antipodal(self):
        a = VoiceprintDatabase.from_array(["x"], [[3.0, 0.0]])
        b = VoiceprintDatabase.from_array(["x"], [[-1.0, 0.0]])
        assert mse(a, b) == 2.0

    def test_scale_invariant_scalar_oracle(self, rng):
        x, y = rng.standard_normal((2, 7, 6))
        a = VoiceprintDatabase.from_array([f"r{i}" for i in range(7)], x)
        b = VoiceprintDatabase.from_array([f"r{i}" for i in reversed(range(7))], 5.0 * y[::-1])
        total = 0.0
        for i in range(7):
            u, v = x[i] / np.linalg.norm(x[i]), y[i] / np.linalg.norm(y[i])
            total += sum((p - q) ** 2 for p, q in zip(u, v)) / 6
        assert mse(a, b) == pytest.approx(total / 7, abs=1e-12)

    def test_id_mismatch(self, rng):
        with pytest.raises(UnknownRecordError):
            mse(basis_db(2), VoiceprintDatabase.from_array(["zz", "e1"], np.eye(2)))

"""
Feature-level and model-level release
=====================================

Feature-level release perturbs every utterance online. Model-level release
precomputes the per-record tables once, so serving an utterance is a lookup
plus one binary search. With the same seed both pipelines release the same
voiceprints.
"""

import tempfile
from pathlib import Path

from voiceind import (
    ReleaseModel,
    UtteranceRecord,
    build_release_model,
    generate_population,
    make_rng,
    release_feature_level,
    release_model_level,
)

db = generate_population(speakers=10, utterances_per_speaker=2, dim=32, seed=3)
utts = [UtteranceRecord.from_voiceprint(vp, f"hello from {vp.id}".encode()) for vp in db]

feature = release_feature_level(utts, db, 4.0, rng=make_rng(11))

# The model is a plain binary file, so it can be built offline and shipped
model = build_release_model(db, 4.0)
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.bin"
    model.save(path)
    print(f"model file: {path.stat().st_size} bytes for {len(db)} records")
    model = ReleaseModel.load(path)

served = release_model_level(utts, model, rng=make_rng(11))

for f, m in zip(feature[:6], served[:6]):
    print(f"{f.id}: feature -> {f.source_candidate_id}  model -> {m.source_candidate_id}  p={f.probability:.3f}")
print("identical releases:", [f.source_candidate_id for f in feature] == [m.source_candidate_id for m in served])

# Sticky release gives every utterance of a voiceprint the same pseudo-speaker
sticky = release_feature_level(utts * 3, db, 0.0, rng=make_rng(2), sticky=True)
print("sticky, ids seen for", utts[0].id, {r.source_candidate_id for r in sticky if r.id == utts[0].id})

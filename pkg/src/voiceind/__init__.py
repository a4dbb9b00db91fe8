"""Voice-indistinguishability: metric differential privacy for speaker embeddings.

Voiceprints are compared by angular distance, perturbed by an exponential
mechanism that releases a record of a candidate database, and released in
bulk by a feature-level (online) or model-level (precomputed) pipeline.
"""

from .embedding import (
    DEFAULT_DIM,
    UtteranceRecord,
    Voiceprint,
    VoiceprintDatabase,
    load_database,
    normalize,
    parse_voiceprint,
    read_database,
    write_database,
)
from .errors import (
    AuditCapExceeded,
    DimensionMismatchError,
    DuplicateIdError,
    EmbeddingFormatError,
    InvalidPriorError,
    InvalidVoiceprintError,
    SynthesisError,
    UnknownRecordError,
    VoiceIndError,
)
from .mechanism import (
    PerturbationDistribution,
    PrivacyBudget,
    build_distribution,
    derive_rng,
    make_rng,
    perturb,
    sample,
)
from .metric import angular_distance, cosine_similarity, distance_matrix
from .population import generate_population
from .release import (
    PassthroughSynthesizer,
    ProtectedUtterance,
    ReleaseModel,
    build_release_model,
    release_database,
    release_feature_level,
    release_model_level,
)

__version__ = "0.1.0"

__all__ = [
    "AuditCapExceeded",
    "DEFAULT_DIM",
    "DimensionMismatchError",
    "DuplicateIdError",
    "EmbeddingFormatError",
    "InvalidPriorError",
    "InvalidVoiceprintError",
    "PassthroughSynthesizer",
    "PerturbationDistribution",
    "PrivacyBudget",
    "ProtectedUtterance",
    "ReleaseModel",
    "SynthesisError",
    "UnknownRecordError",
    "UtteranceRecord",
    "VoiceIndError",
    "Voiceprint",
    "VoiceprintDatabase",
    "angular_distance",
    "build_distribution",
    "build_release_model",
    "cosine_similarity",
    "derive_rng",
    "distance_matrix",
    "generate_population",
    "load_database",
    "make_rng",
    "normalize",
    "parse_voiceprint",
    "perturb",
    "read_database",
    "release_database",
    "release_feature_level",
    "release_model_level",
    "sample",
    "write_database",
]

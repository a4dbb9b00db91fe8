"""Exception types raised across the package."""


class VoiceIndError(Exception):
    """Base class for all errors raised by voiceind."""


class EmbeddingFormatError(VoiceIndError, ValueError):
    """A text record could not be parsed.

    Carries the 1-based line number (and source name when known) so callers
    can point at the offending input.
    """

    def __init__(self, message, lineno=None, source=None):
        self.lineno = lineno
        self.source = source
        self.reason = message
        where = ""
        if source is not None:
            where = f"{source}:"
        if lineno is not None:
            where = f"{where}{lineno}:" if where else f"line {lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class InvalidVoiceprintError(VoiceIndError, ValueError):
    """A vector violates a voiceprint invariant (zero, non-finite, empty id)."""


class DimensionMismatchError(VoiceIndError, ValueError):
    pass


class DuplicateIdError(VoiceIndError, ValueError):
    pass


class UnknownRecordError(VoiceIndError, LookupError):
    pass


class AuditCapExceeded(VoiceIndError, ValueError):
    pass


class InvalidPriorError(VoiceIndError, ValueError):
    pass


class SynthesisError(VoiceIndError, RuntimeError):
    """The synthesizer failed on a specific utterance."""

    def __init__(self, utterance_id, cause):
        self.utterance_id = utterance_id
        super().__init__(f"synthesizer failed on utterance {utterance_id!r}: {cause}")

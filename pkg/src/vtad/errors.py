"""Exception hierarchy for the vtad toolkit.

Every failure mode raised by this package derives from VtadError so callers
(and the CLI) can catch one type and still report the precise class name.
Messages carry actionable context: file, line number, key, or dimension.
"""

from __future__ import annotations


class VtadError(Exception):
    """Base class for all toolkit errors."""


class FormatError(VtadError):
    """A text input (embeddings, annotations, manifest, checkpoint, config) is malformed."""


class DimensionMismatch(VtadError):
    """A vector or index does not match the declared dimensionality."""


class NonFiniteValue(VtadError):
    """NaN or infinity where a finite number is required."""


class InconsistentGender(VtadError):
    """A speaker appears with conflicting gender codes."""


class DuplicateKey(VtadError):
    """The same (speaker, utterance) key occurs twice."""


class MissingEmbedding(VtadError):
    """Lookup of a (speaker, utterance) key that is not in the store."""


class UnknownDescriptor(VtadError):
    """Descriptor name not in the catalog for the given gender."""


class SelfPair(VtadError):
    """An ordered speaker pair whose two sides are the same speaker."""


class TooManyDescriptors(VtadError):
    """An annotation record with more than three descriptors."""


class ValidationError(VtadError):
    """A constructed value violates one of its invariants."""


class InsufficientUtterances(VtadError):
    """A speaker has fewer utterances than the sampling plan requires."""


class InfeasibleSplit(VtadError):
    """The requested split cannot satisfy its invariants on this data.

    When the problem is a specific eval descriptor (or a whole gender's
    descriptor list), `descriptor` / `gender` identify it so callers can
    retry with a reduced request.
    """

    def __init__(self, message: str, *, descriptor: str | None = None, gender=None):
        super().__init__(message)
        self.descriptor = descriptor
        self.gender = gender


class ConfigError(VtadError):
    """A run configuration key is missing, unparsable, or out of range."""


class ShapeMismatch(VtadError):
    """Arrays passed together disagree in shape."""


class DegenerateBatch(VtadError):
    """Train-mode forward needs at least two rows for batch statistics."""


class StaleCache(VtadError):
    """backward() received a cache that does not match the parameters or mode."""


class NonFiniteLoss(VtadError):
    """Training produced a NaN/inf loss; aborted with epoch/batch context."""


class OneClassOnly(VtadError):
    """EER is undefined when only targets or only nontargets are present."""


class EmptyInput(VtadError):
    """A metric was asked to summarize zero scored trials."""


class CatalogMismatch(VtadError):
    """A checkpoint was produced against a different descriptor catalog."""

"""Error taxonomy for the extraction pipeline.

Every failure the tool raises on purpose derives from ExtractError, so the
CLI can map the whole family onto one stderr line and exit code 2. Messages
carry file and line context where one exists.
"""


class ExtractError(Exception):
    """Base class for all extraction failures."""


class ManifestError(ExtractError):
    """The manifest file is malformed or violates its invariants."""


class MissingCheckpoint(ExtractError):
    """No usable encoder checkpoint: not configured, not found, or unreadable."""


class UndecodableAudio(ExtractError):
    """One audio file could not be read or decoded.

    Raised per file inside the run loop; extraction catches it, records the
    failure, and continues with the next manifest row.
    """


class EncoderContract(ExtractError):
    """The loaded encoder returned something other than one embedding vector."""

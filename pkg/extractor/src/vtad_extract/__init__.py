"""Audio-to-embedding extraction for the vtad toolkit.

Reads a TSV manifest of WAV files, normalizes each utterance to mono
16 kHz, runs a frozen TorchScript speaker encoder, and writes the
embeddings in the `#vtad-emb v1` file format the vtad package loads. The
two packages share only that format; neither imports the other.
"""

from .audio import TARGET_RATE, load_mono_16k
from .encoders import ENCODERS, EncoderSpec, encode, load_encoder, resolve_checkpoint
from .errors import (
    EncoderContract,
    ExtractError,
    ManifestError,
    MissingCheckpoint,
    UndecodableAudio,
)
from .extract import ExtractSummary, extract_embeddings
from .manifest import ManifestRow, parse_manifest

__all__ = [
    "ENCODERS",
    "EncoderContract",
    "EncoderSpec",
    "ExtractError",
    "ExtractSummary",
    "ManifestError",
    "ManifestRow",
    "MissingCheckpoint",
    "TARGET_RATE",
    "UndecodableAudio",
    "encode",
    "extract_embeddings",
    "load_encoder",
    "load_mono_16k",
    "parse_manifest",
    "resolve_checkpoint",
]

"""Utterance embedding store: text format, validation, and pair assembly.

File format (one embedding per line, UTF-8, LF):

    #vtad-emb v1 dim=<D> encoder=<tag>
    <speaker_id>\t<utterance_id>\t<M|F>\t<v1>,<v2>,...,<vD>

Lines starting with '#' after the header are comments; blank lines are
ignored. Values are decimal floats written with full round-trip precision,
parsed into float64, so save -> load preserves every vector bit-exactly.
Loading has map semantics: the result is independent of record order.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np

from .catalog import Gender
from .errors import (
    DimensionMismatch,
    DuplicateKey,
    FormatError,
    InconsistentGender,
    MissingEmbedding,
    NonFiniteValue,
)

_HEADER_RE = re.compile(r"^#vtad-emb v1 dim=(\d+) encoder=(\S+)$")


@dataclass(frozen=True)
class Embedding:
    """One utterance's fixed-length vector with its speaker identity."""

    speaker_id: str
    utterance_id: str
    gender: Gender
    vector: np.ndarray  # float64, shape (dim,)

    @property
    def key(self) -> tuple[str, str]:
        return (self.speaker_id, self.utterance_id)


@dataclass
class EmbeddingSet:
    """All embeddings from one file, keyed by (speaker, utterance)."""

    dim: int
    encoder_tag: str
    entries: dict[tuple[str, str], Embedding] = field(default_factory=dict)
    _speaker_gender: dict[str, Gender] = field(default_factory=dict)
    _speaker_utts: dict[str, list[str]] = field(default_factory=dict)

    def add(self, emb: Embedding, context: str = "") -> None:
        where = f"{context}: " if context else ""
        if emb.vector.ndim != 1 or emb.vector.shape[0] != self.dim:
            raise DimensionMismatch(
                f"{where}vector for {emb.key} has {emb.vector.size} values, header says dim={self.dim}"
            )
        if not np.isfinite(emb.vector).all():
            raise NonFiniteValue(f"{where}non-finite value in vector for {emb.key}")
        if emb.key in self.entries:
            raise DuplicateKey(f"{where}duplicate key {emb.key}")
        known = self._speaker_gender.get(emb.speaker_id)
        if known is not None and known != emb.gender:
            raise InconsistentGender(
                f"{where}speaker {emb.speaker_id!r} listed as {emb.gender.value} "
                f"but earlier records say {known.value}"
            )
        self.entries[emb.key] = emb
        self._speaker_gender[emb.speaker_id] = emb.gender
        self._speaker_utts.setdefault(emb.speaker_id, []).append(emb.utterance_id)

    def get(self, speaker_id: str, utterance_id: str) -> Embedding:
        emb = self.entries.get((speaker_id, utterance_id))
        if emb is None:
            raise MissingEmbedding(f"no embedding for ({speaker_id!r}, {utterance_id!r})")
        return emb

    def speakers(self) -> list[str]:
        return sorted(self._speaker_utts)

    def utterances(self, speaker_id: str) -> list[str]:
        """Speaker's utterance ids, lexicographically sorted. Empty if unknown."""
        return sorted(self._speaker_utts.get(speaker_id, []))

    def gender_of(self, speaker_id: str) -> Gender:
        g = self._speaker_gender.get(speaker_id)
        if g is None:
            raise MissingEmbedding(f"speaker {speaker_id!r} has no embeddings")
        return g

    def __len__(self) -> int:
        return len(self.entries)


def load_embedding_set(path: str) -> EmbeddingSet:
    """Parse an embedding file, validating every record.

    Raises FormatError, DimensionMismatch, NonFiniteValue, InconsistentGender,
    or DuplicateKey with file:line context.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        m = _HEADER_RE.match(header)
        if not m:
            raise FormatError(f"{path}:1: bad or missing header, expected '#vtad-emb v1 dim=<D> encoder=<tag>'")
        dim = int(m.group(1))
        if dim < 1:
            raise FormatError(f"{path}:1: dim must be positive, got {dim}")
        store = EmbeddingSet(dim=dim, encoder_tag=m.group(2))
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            ctx = f"{path}:{lineno}"
            fields = line.split("\t")
            if len(fields) != 4:
                raise FormatError(f"{ctx}: expected 4 tab-separated fields, got {len(fields)}")
            speaker, utt, gender_code, values = fields
            if not speaker or not utt:
                raise FormatError(f"{ctx}: empty speaker or utterance id")
            try:
                gender = Gender.from_code(gender_code)
            except ValueError as e:
                raise FormatError(f"{ctx}: {e}") from None
            parts = values.split(",")
            if len(parts) != dim:
                raise DimensionMismatch(f"{ctx}: {len(parts)} values, header says dim={dim}")
            try:
                vec = np.array([float(p) for p in parts], dtype=np.float64)
            except ValueError:
                raise FormatError(f"{ctx}: unparsable float in vector") from None
            store.add(Embedding(speaker, utt, gender, vec), context=ctx)
    return store


def save_embedding_set(store: EmbeddingSet, path: str) -> None:
    """Write the store back out, sorted by key, with round-trip precision."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(f"#vtad-emb v1 dim={store.dim} encoder={store.encoder_tag}\n")
        for key in sorted(store.entries):
            emb = store.entries[key]
            vals = ",".join(repr(float(v)) for v in emb.vector)
            fh.write(f"{emb.speaker_id}\t{emb.utterance_id}\t{emb.gender.value}\t{vals}\n")
    os.replace(tmp, path)


def get_embedding(store: EmbeddingSet, speaker_id: str, utterance_id: str) -> Embedding:
    """Lookup by key; raises MissingEmbedding when absent."""
    return store.get(speaker_id, utterance_id)


def pair_embedding(a: Embedding, b: Embedding) -> np.ndarray:
    """Comparator input for the ordered pair (a, b): the concatenation [a ‖ b].

    Order matters; pair_embedding(a, b) and pair_embedding(b, a) differ.
    """
    va, vb = a.vector, b.vector
    if va.shape != vb.shape:
        raise DimensionMismatch(
            f"cannot pair {a.key} (dim {va.size}) with {b.key} (dim {vb.size})"
        )
    out = np.concatenate([va, vb])
    if not np.isfinite(out).all():
        raise NonFiniteValue(f"non-finite value pairing {a.key} with {b.key}")
    return out

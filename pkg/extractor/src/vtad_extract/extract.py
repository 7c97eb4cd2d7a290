"""The extraction pipeline: manifest rows -> embedding file.

Rows are processed strictly in manifest order and written in that order.
A row whose audio cannot be decoded is recorded as a failure and skipped;
the run continues and reports every failure at the end. Encoder problems
(missing checkpoint, contract violations) abort the run: they would corrupt
every row, not one.
"""

import os
from dataclasses import dataclass, field

from .audio import load_mono_16k
from .encoders import encode, load_encoder, resolve_checkpoint, ENCODERS
from .errors import EncoderContract, ExtractError, UndecodableAudio
from .manifest import ManifestRow


@dataclass
class ExtractSummary:
    out_path: str
    encoder_tag: str
    dim: int
    written: int
    failures: list[tuple[ManifestRow, str]] = field(default_factory=list)


def extract_embeddings(
    rows: list[ManifestRow],
    encoder_name: str,
    out_path: str,
    checkpoint: str | None = None,
) -> ExtractSummary:
    """Encode every decodable manifest row and write one embedding file."""
    spec = ENCODERS.get(encoder_name)
    model = load_encoder(resolve_checkpoint(encoder_name, checkpoint))

    encoded: list[tuple[ManifestRow, list[float]]] = []
    failures: list[tuple[ManifestRow, str]] = []
    dim: int | None = None
    for row in rows:
        try:
            vector = encode(model, load_mono_16k(row.path))
        except UndecodableAudio as exc:
            failures.append((row, str(exc)))
            continue
        if dim is None:
            dim = vector.size
        elif vector.size != dim:
            raise EncoderContract(
                f"encoder emitted dim {vector.size} for {row.path!r} after dim {dim} earlier"
            )
        encoded.append((row, [float(v) for v in vector]))

    if not encoded:
        raise ExtractError(
            f"no records written: all {len(rows)} manifest rows failed to decode"
        )

    assert dim is not None
    tmp = f"{out_path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(f"#vtad-emb v1 dim={dim} encoder={spec.tag}\n")
        for row, values in encoded:
            joined = ",".join(repr(v) for v in values)
            fh.write(f"{row.speaker_id}\t{row.utterance_id}\t{row.gender}\t{joined}\n")
    os.replace(tmp, out_path)
    return ExtractSummary(
        out_path=out_path,
        encoder_tag=spec.tag,
        dim=dim,
        written=len(encoded),
        failures=failures,
    )

"""Audio manifest parsing.

A manifest is a TSV with one utterance per line:

    <speaker_id>\t<utterance_id>\t<M|F>\t<path/to/audio.wav>

'#' lines are comments, blank lines are skipped. (speaker, utterance) keys
must be unique. Paths are kept as written; relative paths resolve against
the process working directory, not the manifest location. Whether a path
exists is deliberately not checked here: unreadable audio is a per-file
runtime event handled during extraction, not a reason to reject the whole
manifest up front.
"""

from dataclasses import dataclass

from .errors import ManifestError

GENDERS = ("M", "F")


@dataclass(frozen=True)
class ManifestRow:
    speaker_id: str
    utterance_id: str
    gender: str
    path: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.speaker_id, self.utterance_id)


def parse_manifest(path: str) -> list[ManifestRow]:
    """Read and validate a manifest, preserving row order."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path!r}: {exc}") from exc
    rows: list[ManifestRow] = []
    seen: dict[tuple[str, str], int] = {}
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ManifestError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}"
                )
            speaker, utterance, gender, audio_path = (f.strip() for f in fields)
            if not speaker or not utterance or not audio_path:
                raise ManifestError(f"{path}:{lineno}: empty field")
            if gender not in GENDERS:
                raise ManifestError(
                    f"{path}:{lineno}: gender must be one of {GENDERS}, got {gender!r}"
                )
            key = (speaker, utterance)
            if key in seen:
                raise ManifestError(
                    f"{path}:{lineno}: duplicate utterance {speaker}/{utterance},"
                    f" first seen on line {seen[key]}"
                )
            seen[key] = lineno
            rows.append(ManifestRow(speaker, utterance, gender, audio_path))
    if not rows:
        raise ManifestError(f"{path}: manifest lists no utterances")
    return rows

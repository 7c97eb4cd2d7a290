"""Shared fixtures: synthetic WAV corpus and scripted stand-in encoders."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
import torch
from scipy.io import wavfile

sys.path.insert(0, str(Path(__file__).parent))

_CONTRACT_RESULTS: list[tuple[str, str, str]] = []


def record_criterion(name: str, status: bool | str, detail: str = "") -> None:
    if isinstance(status, bool):
        status = "PASS" if status else "FAIL"
    _CONTRACT_RESULTS.append((name, status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CONTRACT_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status, detail in _CONTRACT_RESULTS:
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"{name}: {status}{suffix}")


class SegmentStatEncoder(torch.nn.Module):
    """Deterministic toy encoder: eight segment means plus two energy stats."""

    def forward(self, wav: torch.Tensor) -> torch.Tensor:
        x = wav.reshape(-1)
        target = 4096
        n = int(x.shape[0])
        if n < target:
            x = torch.cat([x, torch.zeros(target - n, dtype=x.dtype)])
        else:
            x = x[:target]
        feats = x.reshape(8, 512).mean(dim=1)
        extra = torch.stack([x.abs().mean(), x.pow(2).mean()])
        return torch.cat([feats, extra]).unsqueeze(0)  # (1, 10)


class FlatOutputEncoder(torch.nn.Module):
    """Same features without the leading batch axis, shape (D,)."""

    def forward(self, wav: torch.Tensor) -> torch.Tensor:
        x = wav.reshape(-1)
        target = 1024
        n = int(x.shape[0])
        if n < target:
            x = torch.cat([x, torch.zeros(target - n, dtype=x.dtype)])
        else:
            x = x[:target]
        return x.reshape(4, 256).mean(dim=1)


def _tone(rate: int, seconds: float, freq: float) -> np.ndarray:
    t = np.arange(int(rate * seconds)) / rate
    return 0.4 * np.sin(2.0 * np.pi * freq * t)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Three decodable WAVs covering resampling, mixdown, and PCM formats."""
    root = tmp_path_factory.mktemp("wavs")
    high = _tone(48000, 0.25, 440.0)
    stereo = np.stack([high, 0.5 * high], axis=1)
    wavfile.write(root / "a.wav", 48000, (stereo * 32767).astype(np.int16))
    wavfile.write(root / "b.wav", 16000, _tone(16000, 0.25, 220.0).astype(np.float32))
    wavfile.write(root / "c.wav", 8000, (_tone(8000, 0.25, 110.0) * 32767).astype(np.int16))
    return root


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "segment_stat.pt"
    torch.jit.script(SegmentStatEncoder()).save(str(path))
    return str(path)


@pytest.fixture(scope="session")
def flat_checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt_flat") / "flat.pt"
    torch.jit.script(FlatOutputEncoder()).save(str(path))
    return str(path)


def write_manifest(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# speaker\tutterance\tgender\tpath\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")
    return str(path)


@pytest.fixture
def three_row_manifest(tmp_path, corpus):
    return write_manifest(
        tmp_path / "utts.tsv",
        [
            ("spk_a", "u1", "M", str(corpus / "a.wav")),
            ("spk_a", "u2", "M", str(corpus / "b.wav")),
            ("spk_b", "u1", "F", str(corpus / "c.wav")),
        ],
    )

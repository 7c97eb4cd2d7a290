"""Shared fixtures and the acceptance-criteria summary hook."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vtad.catalog import Gender
from vtad.embeddings import Embedding, EmbeddingSet

_ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


def record_criterion(name: str, status: bool | str, detail: str = "") -> None:
    if isinstance(status, bool):
        status = "PASS" if status else "FAIL"
    _ACCEPTANCE_RESULTS.append((name, status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status, detail in _ACCEPTANCE_RESULTS:
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"{name}: {status}{suffix}")


def make_store(
    speakers: dict[str, Gender],
    utterances_per_speaker: int = 4,
    dim: int = 3,
    seed: int = 0,
) -> EmbeddingSet:
    """Small deterministic embedding set for dataset/plumbing tests."""
    rng = np.random.default_rng(seed)
    store = EmbeddingSet(dim=dim, encoder_tag="test-encoder")
    for spk in sorted(speakers):
        for u in range(utterances_per_speaker):
            store.add(Embedding(spk, f"u{u:02d}", speakers[spk], rng.normal(size=dim)))
    return store


@pytest.fixture
def tiny_store() -> EmbeddingSet:
    return make_store(
        {
            "am1": Gender.MALE,
            "am2": Gender.MALE,
            "am3": Gender.MALE,
            "af1": Gender.FEMALE,
            "af2": Gender.FEMALE,
        }
    )

"""Synthetic planted-attribute data for end-to-end validation.

The generator plants a scalar attribute per synthetic speaker for each
descriptor dimension of the speaker's own gender block, pins the other
block to its 0.5 midpoint, then embeds the 34-vector linearly into embedding
space through a fixed random projection and adds isotropic Gaussian noise
per utterance:

    t_s[own block] ~ U(0,1)^17   speaker attribute scalars
    t_s[other block] = 0.5       constant, carries no speaker information
    base_s = t_s @ P             P is (34, dim), N(0, 1/34) entries, seed-fixed
    e_{s,u} = base_s + sigma * N(0, I_dim)

Pinning the opposite block matters for learnability: speakers of one gender
then span only a 17-dimensional attribute manifold, so a few dozen training
speakers suffice to identify the inverse map from embeddings back to
attributes. Letting all 34 coordinates vary would leave the inverse
underdetermined at that corpus size and the model would generalize poorly to
held-out speakers.

Annotation records are derived from the planted scalars: the ordered pair
(A, B) may claim descriptor d only when t_B[d] - t_A[d] > margin within the
shared gender block, so every emitted label is true by construction and
separated from ties. Each ordered pair keeps at most three qualifying
descriptors, chosen least-globally-used-first so coverage spreads across all
17 per gender instead of piling onto the widest gaps.

Everything is a pure function of the seed: same seed, same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import DescriptorCatalog, Gender, build_catalog
from .dataset import AnnotationRecord
from .embeddings import Embedding, EmbeddingSet

ENCODER_TAG = "synthetic-planted-v1"


@dataclass
class PlantedData:
    embeddings: EmbeddingSet
    records: list[AnnotationRecord]
    attributes: dict[str, np.ndarray]  # speaker -> 34 planted scalars


def generate_planted_data(
    n_speakers: int = 50,
    utterances_per_speaker: int = 20,
    embedding_dim: int = 64,
    noise_sigma: float = 0.1,
    margin: float = 0.15,
    rng_seed: int = 0,
    catalog: DescriptorCatalog | None = None,
) -> PlantedData:
    """Build a seeded synthetic corpus with known ground truth.

    Speakers alternate male/female so both gender blocks are populated. Every
    ordered same-gender pair with at least one qualifying descriptor yields a
    record, so any speaker subset stays densely annotated.
    """
    catalog = catalog or build_catalog()
    rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 0x706C616E]))
    n_dims = catalog.n_dims

    speakers: list[tuple[str, Gender]] = []
    for i in range(n_speakers):
        gender = Gender.MALE if i % 2 == 0 else Gender.FEMALE
        prefix = "sm" if gender is Gender.MALE else "sf"
        speakers.append((f"{prefix}{i:03d}", gender))

    own_block = {
        g: np.array([catalog.index_of(g, n) for n in catalog.names_for(g)])
        for g in (Gender.MALE, Gender.FEMALE)
    }
    attributes: dict[str, np.ndarray] = {}
    for spk, gender in speakers:
        planted = np.full(n_dims, 0.5)
        planted[own_block[gender]] = rng.uniform(0.0, 1.0, size=own_block[gender].size)
        attributes[spk] = planted
    projection = rng.normal(0.0, 1.0, size=(n_dims, embedding_dim)) / np.sqrt(n_dims)

    store = EmbeddingSet(dim=embedding_dim, encoder_tag=ENCODER_TAG)
    for spk, gender in speakers:
        base = attributes[spk] @ projection
        for u in range(utterances_per_speaker):
            vec = base + noise_sigma * rng.normal(0.0, 1.0, size=embedding_dim)
            store.add(Embedding(spk, f"u{u:03d}", gender, vec))

    block = own_block
    usage = np.zeros(n_dims, dtype=np.int64)
    records: list[AnnotationRecord] = []
    for gender in (Gender.MALE, Gender.FEMALE):
        names = catalog.names_for(gender)
        ids = sorted(spk for spk, g in speakers if g == gender)
        for weaker in ids:
            for stronger in ids:
                if weaker == stronger:
                    continue
                diffs = attributes[stronger][block[gender]] - attributes[weaker][block[gender]]
                qualifying = np.flatnonzero(diffs > margin)
                if qualifying.size == 0:
                    continue
                # least-used-first keeps descriptor coverage even
                order = sorted(qualifying, key=lambda j: (usage[block[gender][j]], j))
                chosen = order[:3]
                for j in chosen:
                    usage[block[gender][j]] += 1
                records.append(
                    AnnotationRecord(
                        weaker, stronger, gender, tuple(names[j] for j in chosen)
                    )
                )
    return PlantedData(embeddings=store, records=records, attributes=attributes)


def write_annotations(records: list[AnnotationRecord], path: str) -> None:
    """Write records in the annotation TSV format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# weaker\tstronger\tgender\tdescriptors\n")
        for rec in records:
            fh.write(rec.to_line() + "\n")

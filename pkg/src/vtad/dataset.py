"""Annotated ordered speaker pairs, scenario splits, training samples, trials.

An annotation record says: for every listed descriptor, the second (stronger)
speaker exhibits the attribute more than the first (weaker) speaker. Records
are gender-homogeneous and carry one to three descriptors.

Training samples pair one utterance from each speaker. Each record emits its
K x K forward utterance pairs (label 1 at annotated dims) and the same pairs
reversed (label 0 at annotated dims); all other dims are -1 and masked out of
the loss. Evaluation trials follow the same construction with the eval
utterance sample: K^2 targets (truth 1) plus K^2 reversed nontargets per
annotated-and-selected descriptor.

Utterance sampling is keyed by speaker, without replacement, from the
speaker's sorted utterance pool, with an RNG derived from (plan seed, role,
sha256(speaker id)); it is therefore independent of record order and of which
other speakers exist. Speakers appearing on both sides of a plan get
disjoint train and eval samples.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .catalog import DescriptorCatalog, Gender, build_catalog
from .embeddings import EmbeddingSet
from .errors import (
    FormatError,
    InconsistentGender,
    InfeasibleSplit,
    InsufficientUtterances,
    SelfPair,
    TooManyDescriptors,
    ValidationError,
)

FORWARD = "forward"
REVERSED = "reversed"

MAX_DESCRIPTORS = 3

# eval descriptor lists used when the caller does not supply any
DEFAULT_EVAL_DESCRIPTORS: dict[Gender, tuple[str, ...]] = {
    Gender.MALE: ("Bright", "Thin", "Low", "Magnetic", "Pure"),
    Gender.FEMALE: ("Bright", "Thin", "Low", "Coarse", "Slim"),
}


class Scenario(str, Enum):
    UNSEEN = "unseen"
    SEEN_SPEAKER = "seen-speaker"
    SEEN_SPEAKER_PAIR = "seen-speaker-pair"

    @classmethod
    def from_string(cls, text: str) -> "Scenario":
        for s in cls:
            if s.value == text.strip().lower():
                return s
        raise ValueError(f"unknown scenario {text!r}; expected one of {[s.value for s in cls]}")


@dataclass(frozen=True)
class AnnotationRecord:
    """One ordered speaker pair: stronger > weaker in every listed descriptor."""

    weaker_speaker: str
    stronger_speaker: str
    gender: Gender
    descriptors: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.weaker_speaker == self.stronger_speaker:
            raise SelfPair(f"speaker {self.weaker_speaker!r} paired with itself")
        if not self.weaker_speaker or not self.stronger_speaker:
            raise ValidationError("empty speaker id in annotation record")
        if len(self.descriptors) == 0:
            raise ValidationError(f"record {self.pair_key()} has no descriptors")
        if len(self.descriptors) > MAX_DESCRIPTORS:
            raise TooManyDescriptors(
                f"record {self.pair_key()} lists {len(self.descriptors)} descriptors, max {MAX_DESCRIPTORS}"
            )
        if len(set(self.descriptors)) != len(self.descriptors):
            raise ValidationError(f"record {self.pair_key()} repeats a descriptor")

    def pair_key(self) -> tuple[str, str, str]:
        return (self.gender.value, self.weaker_speaker, self.stronger_speaker)

    def to_line(self) -> str:
        return (
            f"{self.weaker_speaker}\t{self.stronger_speaker}\t{self.gender.value}\t"
            + ",".join(self.descriptors)
        )


@dataclass
class LabelVector:
    """Per-output-dim supervision: 1 stronger, 0 weaker, -1 unannotated."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.int8)
        if v.ndim != 1 or v.size != build_catalog().n_dims:
            raise ValidationError(
                f"label vector must have {build_catalog().n_dims} entries, got shape {v.shape}"
            )
        if not np.isin(v, (-1, 0, 1)).all():
            raise ValidationError("label entries must be -1, 0, or 1")
        v.setflags(write=False)
        self.values = v

    def labeled_dims(self) -> np.ndarray:
        return np.flatnonzero(self.values >= 0)


@dataclass(frozen=True)
class TrainingSample:
    """One supervised pair of utterances. At least one dim must be labeled."""

    utt_a: tuple[str, str]  # (speaker, utterance) presented first
    utt_b: tuple[str, str]  # presented second; label says how b compares to a
    label: LabelVector

    def __post_init__(self) -> None:
        if self.utt_a[0] == self.utt_b[0]:
            raise SelfPair(f"training sample pairs speaker {self.utt_a[0]!r} with itself")
        if self.label.labeled_dims().size == 0:
            raise ValidationError("training sample with all labels -1 supervises nothing")


@dataclass(frozen=True)
class Trial:
    """One evaluation item: does utt_b's speaker beat utt_a's in one descriptor?"""

    utt_a: tuple[str, str]
    utt_b: tuple[str, str]
    descriptor_dim: int
    truth: int

    def __post_init__(self) -> None:
        if self.truth not in (0, 1):
            raise ValidationError(f"trial truth must be 0 or 1, got {self.truth}")
        if self.utt_a[0] == self.utt_b[0]:
            raise SelfPair(f"trial pairs speaker {self.utt_a[0]!r} with itself")


@dataclass
class SplitPlan:
    """A reproducible scenario split plus its per-speaker utterance samples.

    train/eval_indices point into the record list given to split_scenario.
    The utterance dicts are empty until materialized against an embedding set.
    """

    scenario: Scenario
    train_records: list[AnnotationRecord]
    eval_records: list[AnnotationRecord]
    train_indices: tuple[int, ...]
    eval_indices: tuple[int, ...]
    k_train: int
    k_eval: int
    rng_seed: int
    eval_descriptors: dict[Gender, tuple[str, ...]]
    train_utterances: dict[str, tuple[str, ...]] = field(default_factory=dict)
    eval_utterances: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def materialized(self) -> bool:
        return bool(self.train_utterances or self.eval_utterances)


def parse_annotations(path: str, catalog: DescriptorCatalog | None = None) -> list[AnnotationRecord]:
    """Read annotation records from a TSV file.

    Line format: <weaker>\t<stronger>\t<M|F>\t<descr>[,<descr>[,<descr>]]
    '#' lines and blank lines are skipped. Descriptor names are matched
    case-insensitively against the catalog and stored canonically.
    """
    catalog = catalog or build_catalog()
    records: list[AnnotationRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            ctx = f"{path}:{lineno}"
            fields = line.split("\t")
            if len(fields) != 4:
                raise FormatError(f"{ctx}: expected 4 tab-separated fields, got {len(fields)}")
            weaker, stronger, gender_code, desc_field = fields
            try:
                gender = Gender.from_code(gender_code)
            except ValueError as e:
                raise FormatError(f"{ctx}: {e}") from None
            names = [d.strip() for d in desc_field.split(",")]
            if any(not n for n in names):
                raise FormatError(f"{ctx}: empty descriptor name")
            if len(names) > MAX_DESCRIPTORS:
                raise TooManyDescriptors(f"{ctx}: {len(names)} descriptors, max {MAX_DESCRIPTORS}")
            canonical = tuple(catalog.canonical_name(gender, n) for n in names)
            if weaker == stronger:
                raise SelfPair(f"{ctx}: speaker {weaker!r} paired with itself")
            records.append(AnnotationRecord(weaker, stronger, gender, canonical))
    return records


def make_label_vector(
    record: AnnotationRecord, direction: str, catalog: DescriptorCatalog | None = None
) -> LabelVector:
    """Label for a record's pairs: forward marks annotated dims 1, reversed 0."""
    catalog = catalog or build_catalog()
    if direction not in (FORWARD, REVERSED):
        raise ValidationError(f"direction must be {FORWARD!r} or {REVERSED!r}, got {direction!r}")
    values = np.full(catalog.n_dims, -1, dtype=np.int8)
    fill = 1 if direction == FORWARD else 0
    for name in record.descriptors:
        values[catalog.index_of(record.gender, name)] = fill
    return LabelVector(values)


def _speaker_entropy(rng_seed: int, role: int, speaker_id: str) -> list[int]:
    digest = hashlib.sha256(speaker_id.encode("utf-8")).digest()
    return [rng_seed, role, int.from_bytes(digest[:16], "big")]


def _sample_utterances(pool: list[str], k: int, entropy: list[int]) -> tuple[str, ...]:
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    order = rng.permutation(len(pool))
    return tuple(pool[i] for i in order[:k])


def _speakers_of(records: list[AnnotationRecord]) -> set[str]:
    out: set[str] = set()
    for r in records:
        out.add(r.weaker_speaker)
        out.add(r.stronger_speaker)
    return out


def materialize_plan(plan: SplitPlan, embeddings: EmbeddingSet) -> SplitPlan:
    """Fill in the per-speaker utterance samples; idempotent and deterministic.

    Satisfies: samples drawn without replacement from the speaker's sorted
    pool; speakers on both sides get disjoint train/eval samples (such
    speakers need k_train + k_eval utterances). Gender codes in the records
    must agree with the embedding store.
    """
    if plan.materialized:
        return plan
    for rec in plan.train_records + plan.eval_records:
        for spk in (rec.weaker_speaker, rec.stronger_speaker):
            g = embeddings.gender_of(spk)
            if g != rec.gender:
                raise InconsistentGender(
                    f"record {rec.pair_key()} says {rec.gender.value} but embeddings "
                    f"list speaker {spk!r} as {g.value}"
                )
    train_speakers = _speakers_of(plan.train_records)
    eval_speakers = _speakers_of(plan.eval_records)
    train_utts: dict[str, tuple[str, ...]] = {}
    eval_utts: dict[str, tuple[str, ...]] = {}
    for spk in sorted(train_speakers):
        pool = embeddings.utterances(spk)
        if len(pool) < plan.k_train:
            raise InsufficientUtterances(
                f"speaker {spk!r} has {len(pool)} utterances, train sampling needs {plan.k_train}"
            )
        train_utts[spk] = _sample_utterances(pool, plan.k_train, _speaker_entropy(plan.rng_seed, 0, spk))
    for spk in sorted(eval_speakers):
        pool = embeddings.utterances(spk)
        if spk in train_speakers:
            taken = set(train_utts[spk])
            remaining = [u for u in pool if u not in taken]
            if len(remaining) < plan.k_eval:
                raise InsufficientUtterances(
                    f"speaker {spk!r} has {len(pool)} utterances; appearing in both sides "
                    f"needs {plan.k_train} + {plan.k_eval}"
                )
            pool = remaining
        elif len(pool) < plan.k_eval:
            raise InsufficientUtterances(
                f"speaker {spk!r} has {len(pool)} utterances, eval sampling needs {plan.k_eval}"
            )
        eval_utts[spk] = _sample_utterances(pool, plan.k_eval, _speaker_entropy(plan.rng_seed, 1, spk))
    return replace(plan, train_utterances=train_utts, eval_utterances=eval_utts)


def _canonical_eval_descriptors(
    eval_descriptors: dict[Gender, tuple[str, ...]] | None,
    catalog: DescriptorCatalog,
    scenario: Scenario,
) -> dict[Gender, tuple[str, ...]]:
    if scenario is Scenario.SEEN_SPEAKER_PAIR:
        # this protocol always evaluates the full descriptor set
        return {g: catalog.names_for(g) for g in (Gender.MALE, Gender.FEMALE)}
    raw = eval_descriptors if eval_descriptors is not None else DEFAULT_EVAL_DESCRIPTORS
    out: dict[Gender, tuple[str, ...]] = {}
    for g in (Gender.MALE, Gender.FEMALE):
        names = raw.get(g, ())
        canon = tuple(catalog.canonical_name(g, n) for n in names)
        if len(set(canon)) != len(canon):
            raise ValidationError(f"eval descriptor list for {g.value} repeats a name")
        out[g] = canon
    if not any(out.values()):
        raise ValidationError("eval descriptor lists are empty for both genders")
    return out


def split_scenario(
    records: list[AnnotationRecord],
    scenario: Scenario,
    eval_descriptors: dict[Gender, tuple[str, ...]] | None = None,
    rng_seed: int = 0,
    *,
    holdout_fraction: float = 0.2,
    eval_fraction: float = 0.15,
    k_train: int = 20,
    k_eval: int | None = None,
    catalog: DescriptorCatalog | None = None,
) -> SplitPlan:
    """Partition records into train/eval sides for one evaluation scenario.

    unseen            - a holdout_fraction of speakers per gender is removed
                        from training entirely; eval records live among the
                        held-out speakers. Records straddling the boundary are
                        dropped.
    seen-speaker      - eval reuses training speakers but an eval_fraction of
                        ordered pairs (with eval-descriptor overlap) moves out
                        of training; every eval speaker keeps at least one
                        training record.
    seen-speaker-pair - eval reuses the training pairs themselves; distinct
                        utterances are guaranteed later by sampling
                        (k_eval defaults to 10 here, 20 elsewhere).

    Raises InfeasibleSplit when a requested eval descriptor ends up with no
    eval records, or when a gender lacks enough speakers.
    """
    catalog = catalog or build_catalog()
    if not records:
        raise InfeasibleSplit("no annotation records to split")
    if not 0.0 < holdout_fraction < 1.0:
        raise ValidationError(f"holdout_fraction must be in (0,1), got {holdout_fraction}")
    if not 0.0 < eval_fraction < 1.0:
        raise ValidationError(f"eval_fraction must be in (0,1), got {eval_fraction}")
    if k_train < 1:
        raise ValidationError(f"k_train must be >= 1, got {k_train}")
    resolved_k_eval = k_eval if k_eval is not None else (10 if scenario is Scenario.SEEN_SPEAKER_PAIR else 20)
    if resolved_k_eval < 1:
        raise ValidationError(f"k_eval must be >= 1, got {resolved_k_eval}")
    eval_desc = _canonical_eval_descriptors(eval_descriptors, catalog, scenario)
    rng = np.random.default_rng(
        np.random.SeedSequence([rng_seed, list(Scenario).index(scenario)])
    )

    if scenario is Scenario.UNSEEN:
        train_idx, eval_idx = _split_unseen(records, eval_desc, rng, holdout_fraction)
    elif scenario is Scenario.SEEN_SPEAKER:
        train_idx, eval_idx = _split_seen_speaker(records, eval_desc, rng, eval_fraction)
    else:
        train_idx = eval_idx = tuple(range(len(records)))

    plan = SplitPlan(
        scenario=scenario,
        train_records=[records[i] for i in train_idx],
        eval_records=[records[i] for i in eval_idx],
        train_indices=tuple(train_idx),
        eval_indices=tuple(eval_idx),
        k_train=k_train,
        k_eval=resolved_k_eval,
        rng_seed=rng_seed,
        eval_descriptors=eval_desc,
    )
    if scenario is not Scenario.SEEN_SPEAKER_PAIR:
        # the pair scenario evaluates whatever each record carries, so its
        # full-catalog descriptor list is a ceiling rather than a demand
        _check_descriptor_coverage(plan)
    validate_split_plan(plan)
    return plan


def suggest_eval_descriptors(
    records: list[AnnotationRecord],
    scenario: Scenario,
    *,
    per_gender: int = 5,
    rng_seed: int = 0,
    holdout_fraction: float = 0.2,
    eval_fraction: float = 0.15,
    catalog: DescriptorCatalog | None = None,
) -> dict[Gender, tuple[str, ...]]:
    """Pick eval descriptor lists that are feasible for this corpus and seed.

    Starts from each gender's most frequently annotated names (ties broken
    alphabetically) and drops whichever name the split reports as uncovered,
    re-trying until split_scenario succeeds. Useful on small corpora where a
    fixed list may land outside the held-out records. The returned dict is
    exactly what the successful split used, so passing it back to
    split_scenario with the same seed reproduces a valid plan.
    """
    catalog = catalog or build_catalog()
    if per_gender < 1:
        raise ValidationError(f"per_gender must be >= 1, got {per_gender}")
    counts: dict[Gender, dict[str, int]] = {g: {} for g in (Gender.MALE, Gender.FEMALE)}
    for r in records:
        for d in r.descriptors:
            counts[r.gender][d] = counts[r.gender].get(d, 0) + 1
    # frequency-ordered candidate pools; names shown infeasible are removed and
    # the next most common name slides into the active window
    pools = {
        g: sorted(counts[g], key=lambda n: (-counts[g][n], n))
        for g in (Gender.MALE, Gender.FEMALE)
    }
    while True:
        current = {g: tuple(pools[g][:per_gender]) for g in (Gender.MALE, Gender.FEMALE)}
        if not any(current.values()):
            raise InfeasibleSplit(
                f"no feasible eval descriptors for scenario {scenario.value!r} at seed {rng_seed}"
            )
        try:
            plan = split_scenario(
                records,
                scenario,
                eval_descriptors=current,
                rng_seed=rng_seed,
                holdout_fraction=holdout_fraction,
                eval_fraction=eval_fraction,
                catalog=catalog,
            )
            return plan.eval_descriptors
        except InfeasibleSplit as e:
            if e.descriptor is not None and e.gender is not None:
                pools[e.gender].remove(e.descriptor)
            elif e.gender is not None:
                pools[e.gender] = []
            else:
                raise


def _split_unseen(records, eval_desc, rng, holdout_fraction):
    speakers_by_gender: dict[Gender, list[str]] = {g: [] for g in (Gender.MALE, Gender.FEMALE)}
    for r in records:
        for s in (r.weaker_speaker, r.stronger_speaker):
            if s not in speakers_by_gender[r.gender]:
                speakers_by_gender[r.gender].append(s)
    held: set[str] = set()
    for g in (Gender.MALE, Gender.FEMALE):
        speakers = sorted(speakers_by_gender[g])
        if not speakers:
            if eval_desc[g]:
                raise InfeasibleSplit(
                    f"eval descriptors requested for {g.value} but no {g.value} records exist",
                    gender=g,
                )
            continue
        # the permutation is drawn whether or not this gender evaluates, so
        # one gender's holdout never depends on the other gender's request
        order = rng.permutation(len(speakers))
        n_hold = max(2, int(round(holdout_fraction * len(speakers)))) if eval_desc[g] else 0
        if n_hold >= len(speakers):
            raise InfeasibleSplit(
                f"cannot hold out {n_hold} of {len(speakers)} {g.value} speakers and still train"
            )
        held.update(speakers[i] for i in order[:n_hold])
    train_idx = [
        i
        for i, r in enumerate(records)
        if r.weaker_speaker not in held and r.stronger_speaker not in held
    ]
    eval_idx = [
        i
        for i, r in enumerate(records)
        if r.weaker_speaker in held
        and r.stronger_speaker in held
        and any(d in eval_desc[r.gender] for d in r.descriptors)
    ]
    if not train_idx:
        raise InfeasibleSplit("unseen split left no training records")
    return tuple(train_idx), tuple(eval_idx)


def _split_seen_speaker(records, eval_desc, rng, eval_fraction):
    # group record indices by ordered pair so duplicates move together
    groups: dict[tuple[str, str, str], list[int]] = {}
    for i, r in enumerate(records):
        groups.setdefault(r.pair_key(), []).append(i)
    appearances: dict[str, int] = {}
    for r in records:
        appearances[r.weaker_speaker] = appearances.get(r.weaker_speaker, 0) + 1
        appearances[r.stronger_speaker] = appearances.get(r.stronger_speaker, 0) + 1

    eval_group_keys: list[tuple[str, str, str]] = []
    for gender in (Gender.MALE, Gender.FEMALE):
        candidates = sorted(
            key
            for key, idxs in groups.items()
            if key[0] == gender.value
            and any(d in eval_desc[gender] for i in idxs for d in records[i].descriptors)
        )
        if not candidates:
            if eval_desc[gender]:
                raise InfeasibleSplit(
                    f"no {gender.value} pairs carry any requested eval descriptor",
                    gender=gender,
                )
            continue
        target = max(1, int(round(eval_fraction * len(candidates))))
        order = rng.permutation(len(candidates))
        chosen = 0
        for j in order:
            if chosen >= target:
                break
            key = candidates[j]
            idxs = groups[key]
            _, weaker, stronger = key
            uses = len(idxs)
            if appearances[weaker] - uses < 1 or appearances[stronger] - uses < 1:
                continue  # both speakers must keep a training record
            appearances[weaker] -= uses
            appearances[stronger] -= uses
            eval_group_keys.append(key)
            chosen += 1
        if chosen == 0:
            raise InfeasibleSplit(
                f"could not move any {gender.value} pair to eval without orphaning a speaker",
                gender=gender,
            )
    eval_set = set(eval_group_keys)
    train_idx = [i for i, r in enumerate(records) if r.pair_key() not in eval_set]
    eval_idx = [i for i, r in enumerate(records) if r.pair_key() in eval_set]
    return tuple(train_idx), tuple(eval_idx)


def _check_descriptor_coverage(plan: SplitPlan) -> None:
    for gender, names in plan.eval_descriptors.items():
        for name in names:
            covered = any(
                r.gender == gender and name in r.descriptors for r in plan.eval_records
            )
            if not covered:
                raise InfeasibleSplit(
                    f"eval descriptor {name!r} ({gender.value}) has no eval records in this split",
                    descriptor=name,
                    gender=gender,
                )


def validate_split_plan(plan: SplitPlan) -> None:
    """Assert every scenario invariant; raises ValidationError on violation."""
    if not plan.train_records:
        raise ValidationError("split plan has no training records")
    if not plan.eval_records:
        raise ValidationError("split plan has no eval records")
    if plan.k_train < 1 or plan.k_eval < 1:
        raise ValidationError(f"k_train={plan.k_train}, k_eval={plan.k_eval} must be >= 1")
    train_speakers = _speakers_of(plan.train_records)
    eval_speakers = _speakers_of(plan.eval_records)
    train_pairs = {r.pair_key() for r in plan.train_records}
    eval_pairs = {r.pair_key() for r in plan.eval_records}
    if plan.scenario is Scenario.UNSEEN:
        shared = train_speakers & eval_speakers
        if shared:
            raise ValidationError(f"unseen plan shares speakers across sides: {sorted(shared)[:5]}")
    elif plan.scenario is Scenario.SEEN_SPEAKER:
        stray = eval_speakers - train_speakers
        if stray:
            raise ValidationError(f"seen-speaker eval uses speakers absent from training: {sorted(stray)[:5]}")
        shared_pairs = train_pairs & eval_pairs
        if shared_pairs:
            raise ValidationError(f"seen-speaker plan shares ordered pairs: {sorted(shared_pairs)[:5]}")
    else:
        if not eval_pairs <= train_pairs:
            raise ValidationError("seen-speaker-pair eval pairs must be a subset of training pairs")
    if plan.materialized:
        for spk, utts in plan.train_utterances.items():
            if len(set(utts)) != len(utts) or len(utts) != plan.k_train:
                raise ValidationError(f"train sample for {spk!r} is not {plan.k_train} distinct utterances")
        for spk, utts in plan.eval_utterances.items():
            if len(set(utts)) != len(utts) or len(utts) != plan.k_eval:
                raise ValidationError(f"eval sample for {spk!r} is not {plan.k_eval} distinct utterances")
            if spk in train_speakers and spk in plan.train_utterances:
                overlap = set(utts) & set(plan.train_utterances[spk])
                if overlap:
                    raise ValidationError(
                        f"speaker {spk!r} reuses utterances across sides: {sorted(overlap)[:5]}"
                    )


def build_training_samples(
    records: list[AnnotationRecord],
    embeddings: EmbeddingSet,
    plan: SplitPlan,
    catalog: DescriptorCatalog | None = None,
) -> list[TrainingSample]:
    """All 2 * K^2 supervised utterance pairs per record (forward + reversed)."""
    catalog = catalog or build_catalog()
    plan = materialize_plan(plan, embeddings)
    samples: list[TrainingSample] = []
    for rec in records:
        ua = _train_sample_for(plan, embeddings, rec.weaker_speaker)
        ub = _train_sample_for(plan, embeddings, rec.stronger_speaker)
        label_fwd = make_label_vector(rec, FORWARD, catalog)
        label_rev = make_label_vector(rec, REVERSED, catalog)
        fwd = [
            TrainingSample((rec.weaker_speaker, a), (rec.stronger_speaker, b), label_fwd)
            for a in ua
            for b in ub
        ]
        rev = [
            TrainingSample((rec.stronger_speaker, b), (rec.weaker_speaker, a), label_rev)
            for a in ua
            for b in ub
        ]
        samples.extend(fwd)
        samples.extend(rev)
    return samples


def _train_sample_for(plan: SplitPlan, embeddings: EmbeddingSet, spk: str) -> tuple[str, ...]:
    got = plan.train_utterances.get(spk)
    if got is not None:
        return got
    pool = embeddings.utterances(spk)
    if len(pool) < plan.k_train:
        raise InsufficientUtterances(
            f"speaker {spk!r} has {len(pool)} utterances, train sampling needs {plan.k_train}"
        )
    return _sample_utterances(pool, plan.k_train, _speaker_entropy(plan.rng_seed, 0, spk))


def build_trials(
    plan: SplitPlan,
    embeddings: EmbeddingSet,
    catalog: DescriptorCatalog | None = None,
) -> list[Trial]:
    """Eval trials: per record and selected descriptor, K^2 targets + K^2 reversed."""
    catalog = catalog or build_catalog()
    plan = materialize_plan(plan, embeddings)
    trials: list[Trial] = []
    for rec in plan.eval_records:
        selected = [d for d in rec.descriptors if d in plan.eval_descriptors[rec.gender]]
        if not selected:
            continue
        ua = plan.eval_utterances[rec.weaker_speaker]
        ub = plan.eval_utterances[rec.stronger_speaker]
        for name in selected:
            dim = catalog.index_of(rec.gender, name)
            trials.extend(
                Trial((rec.weaker_speaker, a), (rec.stronger_speaker, b), dim, 1)
                for a in ua
                for b in ub
            )
            trials.extend(
                Trial((rec.stronger_speaker, b), (rec.weaker_speaker, a), dim, 0)
                for a in ua
                for b in ub
            )
    return trials


_MANIFEST_HEADER = "#vtad-split v1"


def save_manifest(plan: SplitPlan, path: str) -> None:
    """Serialize a materialized plan; reruns with equal inputs are byte-identical."""
    if not plan.materialized:
        raise ValidationError("cannot save an unmaterialized split plan")
    lines = [
        _MANIFEST_HEADER,
        f"scenario={plan.scenario.value}",
        f"rng_seed={plan.rng_seed}",
        f"k_train={plan.k_train}",
        f"k_eval={plan.k_eval}",
        f"eval_descriptors_M={','.join(plan.eval_descriptors.get(Gender.MALE, ()))}",
        f"eval_descriptors_F={','.join(plan.eval_descriptors.get(Gender.FEMALE, ()))}",
        "[train_records]",
    ]
    for idx, rec in zip(plan.train_indices, plan.train_records):
        lines.append(f"{idx}\t{rec.to_line()}")
    lines.append("[eval_records]")
    for idx, rec in zip(plan.eval_indices, plan.eval_records):
        lines.append(f"{idx}\t{rec.to_line()}")
    lines.append("[train_utterances]")
    for spk in sorted(plan.train_utterances):
        lines.append(f"{spk}\t{','.join(plan.train_utterances[spk])}")
    lines.append("[eval_utterances]")
    for spk in sorted(plan.eval_utterances):
        lines.append(f"{spk}\t{','.join(plan.eval_utterances[spk])}")
    lines.append("#end")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_manifest(path: str, catalog: DescriptorCatalog | None = None) -> SplitPlan:
    """Parse and re-validate a split manifest."""
    catalog = catalog or build_catalog()
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MANIFEST_HEADER:
        raise FormatError(f"{path}:1: expected header {_MANIFEST_HEADER!r}")
    meta: dict[str, str] = {}
    sections: dict[str, list[tuple[int, str]]] = {}
    current: str | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "#end":
            break
        if not line.strip():
            continue
        m = re.match(r"^\[(\w+)\]$", line)
        if m:
            current = m.group(1)
            sections[current] = []
            continue
        if current is None:
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key=value before sections")
            k, v = line.split("=", 1)
            meta[k] = v
        else:
            sections[current].append((lineno, line))
    for key in ("scenario", "rng_seed", "k_train", "k_eval"):
        if key not in meta:
            raise FormatError(f"{path}: missing {key}")
    for sec in ("train_records", "eval_records", "train_utterances", "eval_utterances"):
        if sec not in sections:
            raise FormatError(f"{path}: missing [{sec}] section")
    try:
        scenario = Scenario.from_string(meta["scenario"])
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None

    def parse_records(rows: list[tuple[int, str]]) -> tuple[list[AnnotationRecord], tuple[int, ...]]:
        recs, idxs = [], []
        for lineno, row in rows:
            parts = row.split("\t")
            if len(parts) != 5:
                raise FormatError(f"{path}:{lineno}: record line needs 5 fields, got {len(parts)}")
            try:
                idx = int(parts[0])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad record index {parts[0]!r}") from None
            gender = Gender.from_code(parts[3])
            names = tuple(catalog.canonical_name(gender, n) for n in parts[4].split(","))
            recs.append(AnnotationRecord(parts[1], parts[2], gender, names))
            idxs.append(idx)
        return recs, tuple(idxs)

    def parse_utts(rows: list[tuple[int, str]]) -> dict[str, tuple[str, ...]]:
        out: dict[str, tuple[str, ...]] = {}
        for lineno, row in rows:
            parts = row.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: utterance line needs 2 fields")
            if parts[0] in out:
                raise FormatError(f"{path}:{lineno}: duplicate speaker {parts[0]!r}")
            out[parts[0]] = tuple(parts[1].split(","))
        return out

    train_records, train_indices = parse_records(sections["train_records"])
    eval_records, eval_indices = parse_records(sections["eval_records"])
    eval_desc = {}
    for g, key in ((Gender.MALE, "eval_descriptors_M"), (Gender.FEMALE, "eval_descriptors_F")):
        raw = meta.get(key, "")
        eval_desc[g] = tuple(catalog.canonical_name(g, n) for n in raw.split(",") if n)
    plan = SplitPlan(
        scenario=scenario,
        train_records=train_records,
        eval_records=eval_records,
        train_indices=train_indices,
        eval_indices=eval_indices,
        k_train=int(meta["k_train"]),
        k_eval=int(meta["k_eval"]),
        rng_seed=int(meta["rng_seed"]),
        eval_descriptors=eval_desc,
        train_utterances=parse_utts(sections["train_utterances"]),
        eval_utterances=parse_utts(sections["eval_utterances"]),
    )
    validate_split_plan(plan)
    return plan

"""Annotations, label vectors, scenario splits, sampling, trials, manifests."""

import numpy as np
import pytest

from conftest import make_store
from vtad.catalog import Gender, build_catalog
from vtad.dataset import (
    FORWARD,
    REVERSED,
    AnnotationRecord,
    LabelVector,
    Scenario,
    SplitPlan,
    TrainingSample,
    Trial,
    build_training_samples,
    build_trials,
    load_manifest,
    make_label_vector,
    materialize_plan,
    parse_annotations,
    save_manifest,
    split_scenario,
    validate_split_plan,
)
from vtad.errors import (
    FormatError,
    InconsistentGender,
    InfeasibleSplit,
    InsufficientUtterances,
    SelfPair,
    TooManyDescriptors,
    UnknownDescriptor,
    ValidationError,
)


def write(tmp_path, text, name="ann.tsv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def dense_corpus(n_per_gender=6):
    """Every ordered same-gender pair, annotated Bright + Thin + one rotating extra."""
    cat = build_catalog()
    records = []
    speakers = {}
    for gender, prefix in ((Gender.MALE, "m"), (Gender.FEMALE, "f")):
        names = [n for n in cat.names_for(gender) if n not in ("Bright", "Thin")]
        ids = [f"{prefix}{i:02d}" for i in range(n_per_gender)]
        for s in ids:
            speakers[s] = gender
        k = 0
        for a in ids:
            for b in ids:
                if a == b:
                    continue
                extra = names[k % len(names)]
                k += 1
                records.append(AnnotationRecord(a, b, gender, ("Bright", "Thin", extra)))
    return records, speakers


class TestParseAnnotations:
    def test_good_file(self, tmp_path):
        text = (
            "# weaker\tstronger\tgender\tdescriptors\n"
            "p1\tp2\tM\tBright\n"
            "p3\tp4\tF\tbright,THIN, slim\n"
            "\n"
            "p2\tp1\tM\tHusky\n"
        )
        records = parse_annotations(write(tmp_path, text))
        assert len(records) == 3
        assert records[0].descriptors == ("Bright",)
        assert records[1].descriptors == ("Bright", "Thin", "Slim")  # canonicalized
        assert records[1].gender is Gender.FEMALE
        assert records[2].weaker_speaker == "p2"

    def test_field_count_error_names_line(self, tmp_path):
        with pytest.raises(FormatError, match=":2"):
            parse_annotations(write(tmp_path, "# header\np1\tp2\tM\n"))

    def test_unknown_descriptor(self, tmp_path):
        with pytest.raises(UnknownDescriptor):
            parse_annotations(write(tmp_path, "p1\tp2\tM\tSparkly\n"))
        # gender-validity is part of the check
        with pytest.raises(UnknownDescriptor):
            parse_annotations(write(tmp_path, "p1\tp2\tM\tShrill\n"))

    def test_self_pair(self, tmp_path):
        with pytest.raises(SelfPair):
            parse_annotations(write(tmp_path, "p1\tp1\tM\tBright\n"))

    def test_too_many_descriptors(self, tmp_path):
        with pytest.raises(TooManyDescriptors):
            parse_annotations(write(tmp_path, "p1\tp2\tM\tBright,Thin,Low,Pure\n"))

    def test_empty_descriptor_token(self, tmp_path):
        with pytest.raises(FormatError):
            parse_annotations(write(tmp_path, "p1\tp2\tM\tBright,,Thin\n"))

    def test_bad_gender_code(self, tmp_path):
        with pytest.raises(FormatError):
            parse_annotations(write(tmp_path, "p1\tp2\tX\tBright\n"))


class TestAnnotationRecord:
    def test_duplicate_descriptor_rejected(self):
        with pytest.raises(ValidationError):
            AnnotationRecord("a", "b", Gender.MALE, ("Bright", "Bright"))

    def test_zero_descriptors_rejected(self):
        with pytest.raises(ValidationError):
            AnnotationRecord("a", "b", Gender.MALE, ())


class TestLabelVector:
    def test_forward_marks_annotated_dims_one(self):
        cat = build_catalog()
        rec = AnnotationRecord("a", "b", Gender.MALE, ("Bright", "Husky"))
        lv = make_label_vector(rec, FORWARD)
        assert lv.values[cat.index_of(Gender.MALE, "Bright")] == 1
        assert lv.values[cat.index_of(Gender.MALE, "Husky")] == 1
        assert (lv.values == -1).sum() == 32

    def test_reversed_marks_annotated_dims_zero(self):
        cat = build_catalog()
        rec = AnnotationRecord("a", "b", Gender.FEMALE, ("Shrill",))
        lv = make_label_vector(rec, REVERSED)
        assert lv.values[cat.index_of(Gender.FEMALE, "Shrill")] == 0
        assert (lv.values == -1).sum() == 33

    def test_labels_live_in_own_gender_block(self):
        rec = AnnotationRecord("a", "b", Gender.FEMALE, ("Bright", "Thin", "Low"))
        lv = make_label_vector(rec, FORWARD)
        assert (lv.labeled_dims() >= 17).all()

    def test_wrong_length_rejected(self):
        with pytest.raises(ValidationError):
            LabelVector(np.zeros(33, dtype=np.int8))

    def test_out_of_range_entries_rejected(self):
        bad = np.full(34, -1, dtype=np.int8)
        bad[0] = 2
        with pytest.raises(ValidationError):
            LabelVector(bad)

    def test_bad_direction_rejected(self):
        rec = AnnotationRecord("a", "b", Gender.MALE, ("Bright",))
        with pytest.raises(ValidationError):
            make_label_vector(rec, "sideways")


class TestTrainingSampleInvariants:
    def test_all_unlabeled_rejected(self):
        lv = LabelVector(np.full(34, -1, dtype=np.int8))
        with pytest.raises(ValidationError):
            TrainingSample(("a", "u1"), ("b", "u1"), lv)

    def test_same_speaker_rejected(self):
        vals = np.full(34, -1, dtype=np.int8)
        vals[0] = 1
        with pytest.raises(SelfPair):
            TrainingSample(("a", "u1"), ("a", "u2"), LabelVector(vals))


def plan_for(records, store, scenario=Scenario.UNSEEN, k_train=2, k_eval=2, **kw):
    plan = split_scenario(records, scenario, k_train=k_train, k_eval=k_eval, **kw)
    return materialize_plan(plan, store)


class TestBuildTrainingSamples:
    def test_two_k_squared_per_record(self, tiny_store):
        rec = AnnotationRecord("am1", "am2", Gender.MALE, ("Bright",))
        plan = SplitPlan(
            scenario=Scenario.UNSEEN,
            train_records=[rec],
            eval_records=[AnnotationRecord("af1", "af2", Gender.FEMALE, ("Bright",))],
            train_indices=(0,),
            eval_indices=(1,),
            k_train=3,
            k_eval=1,
            rng_seed=9,
            eval_descriptors={Gender.MALE: (), Gender.FEMALE: ("Bright",)},
        )
        samples = build_training_samples([rec], tiny_store, plan)
        assert len(samples) == 2 * 3 * 3

    def test_eight_hundred_samples_at_k_twenty(self):
        store = make_store({"x1": Gender.MALE, "x2": Gender.MALE}, utterances_per_speaker=21)
        rec = AnnotationRecord("x1", "x2", Gender.MALE, ("Low",))
        plan = SplitPlan(
            scenario=Scenario.UNSEEN,
            train_records=[rec],
            eval_records=[rec],
            train_indices=(0,),
            eval_indices=(0,),
            k_train=20,
            k_eval=1,
            rng_seed=0,
            eval_descriptors={Gender.MALE: ("Low",), Gender.FEMALE: ()},
        )
        samples = build_training_samples([rec], store, plan)
        assert len(samples) == 800

    def test_forward_reversed_bijection_and_labels(self, tiny_store):
        cat = build_catalog()
        rec = AnnotationRecord("am1", "am2", Gender.MALE, ("Pure",))
        dim = cat.index_of(Gender.MALE, "Pure")
        plan = SplitPlan(
            scenario=Scenario.UNSEEN,
            train_records=[rec],
            eval_records=[rec],
            train_indices=(0,),
            eval_indices=(0,),
            k_train=2,
            k_eval=1,
            rng_seed=4,
            eval_descriptors={Gender.MALE: ("Pure",), Gender.FEMALE: ()},
        )
        samples = build_training_samples([rec], tiny_store, plan)
        fwd = [s for s in samples if s.label.values[dim] == 1]
        rev = [s for s in samples if s.label.values[dim] == 0]
        assert len(fwd) == len(rev) == 4
        # reversed samples are exactly the forward pairs flipped
        assert {(s.utt_a, s.utt_b) for s in rev} == {(s.utt_b, s.utt_a) for s in fwd}
        for s in fwd:
            assert s.utt_a[0] == "am1" and s.utt_b[0] == "am2"
            assert set(np.unique(s.label.values)) <= {-1, 1}

    def test_deterministic_given_seed(self, tiny_store):
        rec = AnnotationRecord("am1", "am2", Gender.MALE, ("Pure",))
        kw = dict(
            scenario=Scenario.UNSEEN,
            train_records=[rec],
            eval_records=[rec],
            train_indices=(0,),
            eval_indices=(0,),
            k_train=2,
            k_eval=1,
            eval_descriptors={Gender.MALE: ("Pure",), Gender.FEMALE: ()},
        )
        a = build_training_samples([rec], tiny_store, SplitPlan(rng_seed=5, **kw))
        b = build_training_samples([rec], tiny_store, SplitPlan(rng_seed=5, **kw))
        c = build_training_samples([rec], tiny_store, SplitPlan(rng_seed=6, **kw))
        assert [(s.utt_a, s.utt_b) for s in a] == [(s.utt_a, s.utt_b) for s in b]
        assert [(s.utt_a, s.utt_b) for s in a] != [(s.utt_a, s.utt_b) for s in c]

    def test_insufficient_utterances(self, tiny_store):
        rec = AnnotationRecord("am1", "am2", Gender.MALE, ("Pure",))
        plan = SplitPlan(
            scenario=Scenario.UNSEEN,
            train_records=[rec],
            eval_records=[rec],
            train_indices=(0,),
            eval_indices=(0,),
            k_train=99,
            k_eval=1,
            rng_seed=0,
            eval_descriptors={Gender.MALE: ("Pure",), Gender.FEMALE: ()},
        )
        with pytest.raises(InsufficientUtterances, match="am1"):
            build_training_samples([rec], tiny_store, plan)


class TestSplitScenarios:
    def test_unseen_disjoint_speakers(self):
        records, speakers = dense_corpus()
        plan = split_scenario(
            records,
            Scenario.UNSEEN,
            eval_descriptors={Gender.MALE: ("Bright", "Thin"), Gender.FEMALE: ("Bright",)},
            rng_seed=1,
        )
        train_spk = {s for r in plan.train_records for s in (r.weaker_speaker, r.stronger_speaker)}
        eval_spk = {s for r in plan.eval_records for s in (r.weaker_speaker, r.stronger_speaker)}
        assert train_spk and eval_spk
        assert not (train_spk & eval_spk)
        validate_split_plan(plan)

    def test_unseen_eval_records_carry_requested_descriptors(self):
        records, _ = dense_corpus()
        wanted = {Gender.MALE: ("Bright",), Gender.FEMALE: ("Thin",)}
        plan = split_scenario(records, Scenario.UNSEEN, eval_descriptors=wanted, rng_seed=3)
        for gender, names in wanted.items():
            for name in names:
                assert any(
                    r.gender == gender and name in r.descriptors for r in plan.eval_records
                )

    def test_seen_speaker_pair_disjoint_but_speakers_shared(self):
        records, _ = dense_corpus()
        plan = split_scenario(
            records,
            Scenario.SEEN_SPEAKER,
            eval_descriptors={Gender.MALE: ("Bright",), Gender.FEMALE: ("Bright",)},
            rng_seed=2,
        )
        train_pairs = {r.pair_key() for r in plan.train_records}
        eval_pairs = {r.pair_key() for r in plan.eval_records}
        assert eval_pairs and not (train_pairs & eval_pairs)
        train_spk = {s for r in plan.train_records for s in (r.weaker_speaker, r.stronger_speaker)}
        eval_spk = {s for r in plan.eval_records for s in (r.weaker_speaker, r.stronger_speaker)}
        assert eval_spk <= train_spk
        validate_split_plan(plan)

    def test_seen_speaker_pair_scenario_reuses_pairs_with_all_descriptors(self):
        records, _ = dense_corpus()
        cat = build_catalog()
        plan = split_scenario(records, Scenario.SEEN_SPEAKER_PAIR, rng_seed=5)
        assert plan.k_eval == 10  # protocol default
        assert plan.eval_descriptors[Gender.MALE] == cat.names_for(Gender.MALE)
        assert {r.pair_key() for r in plan.eval_records} == {r.pair_key() for r in plan.train_records}
        validate_split_plan(plan)

    def test_same_seed_same_plan(self):
        records, _ = dense_corpus()
        lists = {Gender.MALE: ("Bright", "Thin"), Gender.FEMALE: ("Bright", "Thin")}
        a = split_scenario(records, Scenario.UNSEEN, rng_seed=7, eval_descriptors=lists)
        b = split_scenario(records, Scenario.UNSEEN, rng_seed=7, eval_descriptors=lists)
        c = split_scenario(records, Scenario.UNSEEN, rng_seed=8, eval_descriptors=lists)
        assert a.train_indices == b.train_indices and a.eval_indices == b.eval_indices
        assert a.train_indices != c.train_indices or a.eval_indices != c.eval_indices

    def test_default_eval_descriptors_are_five_per_gender(self):
        # each unordered pair's two directions jointly carry all five defaults,
        # so the default request is feasible whoever gets held out
        from vtad.dataset import DEFAULT_EVAL_DESCRIPTORS

        records = []
        for gender, prefix in ((Gender.MALE, "m"), (Gender.FEMALE, "f")):
            d = DEFAULT_EVAL_DESCRIPTORS[gender]
            ids = [f"{prefix}{i:02d}" for i in range(8)]
            for a in ids:
                for b in ids:
                    if a < b:
                        records.append(AnnotationRecord(a, b, gender, d[:3]))
                    elif a > b:
                        records.append(AnnotationRecord(a, b, gender, (d[3], d[4], d[0])))
        plan = split_scenario(records, Scenario.UNSEEN, rng_seed=11, holdout_fraction=0.3)
        assert plan.eval_descriptors[Gender.MALE] == DEFAULT_EVAL_DESCRIPTORS[Gender.MALE]
        assert len(plan.eval_descriptors[Gender.FEMALE]) == 5
        assert plan.k_eval == 20

    def test_infeasible_descriptor_raises(self):
        # Husky never annotated -> requesting it for eval must fail
        records = [
            AnnotationRecord(f"a{i}", f"a{j}", Gender.MALE, ("Bright",))
            for i in range(6)
            for j in range(6)
            if i != j
        ]
        with pytest.raises(InfeasibleSplit, match="Husky"):
            split_scenario(
                records,
                Scenario.UNSEEN,
                eval_descriptors={Gender.MALE: ("Husky",), Gender.FEMALE: ()},
                rng_seed=0,
            )

    def test_too_few_speakers_raises(self):
        records = [AnnotationRecord("a", "b", Gender.MALE, ("Bright",))]
        with pytest.raises(InfeasibleSplit):
            split_scenario(
                records,
                Scenario.UNSEEN,
                eval_descriptors={Gender.MALE: ("Bright",), Gender.FEMALE: ()},
                rng_seed=0,
            )

    def test_empty_records_raises(self):
        with pytest.raises(InfeasibleSplit):
            split_scenario([], Scenario.UNSEEN, rng_seed=0)


class TestMaterialize:
    def test_samples_without_replacement_and_sorted_pool(self):
        records, speakers = dense_corpus(n_per_gender=4)
        store = make_store(speakers, utterances_per_speaker=6, seed=3)
        plan = plan_for(
            records,
            store,
            eval_descriptors={Gender.MALE: ("Bright",), Gender.FEMALE: ("Bright",)},
            rng_seed=13,
            holdout_fraction=0.5,
        )
        for utts in list(plan.train_utterances.values()) + list(plan.eval_utterances.values()):
            assert len(set(utts)) == len(utts)
        validate_split_plan(plan)

    def test_sampling_is_per_speaker_and_record_order_independent(self):
        records, speakers = dense_corpus(n_per_gender=4)
        store = make_store(speakers, utterances_per_speaker=6, seed=3)
        kw = dict(
            eval_descriptors={Gender.MALE: ("Bright",), Gender.FEMALE: ("Bright",)},
            rng_seed=13,
            holdout_fraction=0.5,
        )
        a = plan_for(records, store, **kw)
        b = plan_for(list(reversed(records)), store, **kw)
        assert a.train_utterances == b.train_utterances
        assert a.eval_utterances == b.eval_utterances

    def test_shared_speakers_get_disjoint_train_eval_samples(self):
        records, speakers = dense_corpus(n_per_gender=4)
        store = make_store(speakers, utterances_per_speaker=8, seed=5)
        plan = plan_for(
            records,
            store,
            scenario=Scenario.SEEN_SPEAKER_PAIR,
            k_train=3,
            k_eval=3,
            rng_seed=21,
        )
        for spk, eutts in plan.eval_utterances.items():
            assert not (set(eutts) & set(plan.train_utterances[spk]))

    def test_shared_speaker_needs_k_train_plus_k_eval(self):
        records, speakers = dense_corpus(n_per_gender=4)
        store = make_store(speakers, utterances_per_speaker=5, seed=5)
        plan = split_scenario(records, Scenario.SEEN_SPEAKER_PAIR, k_train=3, k_eval=3, rng_seed=0)
        with pytest.raises(InsufficientUtterances, match="both sides"):
            materialize_plan(plan, store)

    def test_gender_conflict_with_store_rejected(self):
        records = [
            AnnotationRecord("a", "b", Gender.MALE, ("Bright",)),
            AnnotationRecord("b", "a", Gender.MALE, ("Thin",)),
            AnnotationRecord("c", "d", Gender.MALE, ("Bright", "Thin")),
            AnnotationRecord("d", "c", Gender.MALE, ("Thin",)),
        ]
        store = make_store(
            {"a": Gender.MALE, "b": Gender.FEMALE, "c": Gender.MALE, "d": Gender.MALE},
            utterances_per_speaker=4,
        )
        plan = split_scenario(
            records,
            Scenario.SEEN_SPEAKER,
            eval_descriptors={Gender.MALE: ("Thin",), Gender.FEMALE: ()},
            rng_seed=1,
            k_train=2,
            k_eval=2,
        )
        with pytest.raises(InconsistentGender, match="'b'"):
            materialize_plan(plan, store)


class TestBuildTrials:
    def make_plan(self, store):
        r1 = AnnotationRecord("am1", "am2", Gender.MALE, ("Bright", "Thin", "Low"))
        r2 = AnnotationRecord("am2", "am3", Gender.MALE, ("Bright",))
        train = [AnnotationRecord("af1", "af2", Gender.FEMALE, ("Bright",))]
        plan = SplitPlan(
            scenario=Scenario.UNSEEN,
            train_records=train,
            eval_records=[r1, r2],
            train_indices=(0,),
            eval_indices=(1, 2),
            k_train=2,
            k_eval=2,
            rng_seed=3,
            eval_descriptors={Gender.MALE: ("Bright", "Thin"), Gender.FEMALE: ("Bright",)},
        )
        return materialize_plan(plan, store), r1, r2

    def test_counts_follow_the_formula(self, tiny_store):
        plan, r1, r2 = self.make_plan(tiny_store)
        trials = build_trials(plan, tiny_store)
        # r1 contributes |{Bright,Thin,Low} ∩ {Bright,Thin}| = 2 dims, r2 one dim
        expected_targets = (2 + 1) * plan.k_eval**2
        targets = [t for t in trials if t.truth == 1]
        nontargets = [t for t in trials if t.truth == 0]
        assert len(targets) == expected_targets
        assert len(nontargets) == expected_targets

    def test_nontargets_are_reversed_targets(self, tiny_store):
        plan, _, _ = self.make_plan(tiny_store)
        trials = build_trials(plan, tiny_store)
        fwd = {(t.utt_a, t.utt_b, t.descriptor_dim) for t in trials if t.truth == 1}
        rev = {(t.utt_b, t.utt_a, t.descriptor_dim) for t in trials if t.truth == 0}
        assert fwd == rev

    def test_target_orientation_weaker_first(self, tiny_store):
        plan, r1, _ = self.make_plan(tiny_store)
        for t in build_trials(plan, tiny_store):
            if t.truth == 1:
                assert t.utt_a[0] in ("am1", "am2") and t.utt_b[0] in ("am2", "am3")

    def test_unselected_descriptors_add_no_trials(self, tiny_store):
        plan, _, _ = self.make_plan(tiny_store)
        cat = build_catalog()
        low = cat.index_of(Gender.MALE, "Low")
        assert all(t.descriptor_dim != low for t in build_trials(plan, tiny_store))

    def test_trials_use_eval_sample_only(self, tiny_store):
        plan, _, _ = self.make_plan(tiny_store)
        trials = build_trials(plan, tiny_store)
        allowed = {
            (spk, u) for spk, utts in plan.eval_utterances.items() for u in utts
        }
        for t in trials:
            assert t.utt_a in allowed and t.utt_b in allowed


class TestManifest:
    def build(self, tmp_path):
        records, speakers = dense_corpus(n_per_gender=4)
        store = make_store(speakers, utterances_per_speaker=6, seed=7)
        plan = plan_for(
            records,
            store,
            eval_descriptors={Gender.MALE: ("Bright", "Thin"), Gender.FEMALE: ("Bright",)},
            rng_seed=17,
            holdout_fraction=0.5,
        )
        path = str(tmp_path / "split.manifest")
        save_manifest(plan, path)
        return plan, path

    def test_round_trip(self, tmp_path):
        plan, path = self.build(tmp_path)
        loaded = load_manifest(path)
        assert loaded.scenario == plan.scenario
        assert loaded.rng_seed == plan.rng_seed
        assert loaded.k_train == plan.k_train and loaded.k_eval == plan.k_eval
        assert loaded.train_indices == plan.train_indices
        assert loaded.eval_indices == plan.eval_indices
        assert loaded.eval_descriptors == plan.eval_descriptors
        assert loaded.train_utterances == plan.train_utterances
        assert loaded.eval_utterances == plan.eval_utterances
        assert [r.to_line() for r in loaded.train_records] == [r.to_line() for r in plan.train_records]

    def test_rewrites_are_byte_identical(self, tmp_path):
        plan, path = self.build(tmp_path)
        other = str(tmp_path / "again.manifest")
        save_manifest(plan, other)
        assert open(path, "rb").read() == open(other, "rb").read()

    def test_unmaterialized_plan_cannot_be_saved(self, tmp_path):
        records, _ = dense_corpus(n_per_gender=4)
        plan = split_scenario(
            records,
            Scenario.UNSEEN,
            eval_descriptors={Gender.MALE: ("Bright",), Gender.FEMALE: ("Bright",)},
            rng_seed=1,
            holdout_fraction=0.5,
        )
        with pytest.raises(ValidationError):
            save_manifest(plan, str(tmp_path / "x.manifest"))

    def test_corrupt_section_rejected(self, tmp_path):
        _, path = self.build(tmp_path)
        text = open(path).read().replace("[eval_utterances]", "[something_else]")
        open(path, "w").write(text)
        with pytest.raises(FormatError):
            load_manifest(path)

    def test_tampered_disjointness_rejected(self, tmp_path):
        plan, path = self.build(tmp_path)
        # move one eval speaker's record into train: violates unseen disjointness
        eval_rec = plan.eval_records[0]
        lines = open(path).read().splitlines()
        idx = lines.index("[eval_records]")
        lines.insert(idx, f"999\t{eval_rec.to_line()}")
        open(path, "w").write("\n".join(lines) + "\n")
        with pytest.raises(ValidationError):
            load_manifest(path)


def test_trial_invariants():
    with pytest.raises(ValidationError):
        Trial(("a", "u"), ("b", "u"), 0, truth=2)
    with pytest.raises(SelfPair):
        Trial(("a", "u"), ("a", "v"), 0, truth=1)

"""Command-line interface: split / train / eval / report.

Configuration is a flat key=value text file ('#' comments allowed); a few
keys can be overridden by flags. Validation is fail-fast: unknown keys,
missing files, and unparsable values abort before any work starts. All
toolkit failures exit with code 2 and a single machine-parsable stderr line:

    vtad-error: <ErrorClass>: <message>
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from .catalog import Gender, build_catalog
from .dataset import (
    Scenario,
    SplitPlan,
    build_training_samples,
    build_trials,
    load_manifest,
    materialize_plan,
    parse_annotations,
    save_manifest,
    split_scenario,
)
from .diffnet import (
    TrainConfig,
    default_learning_rate,
    load_checkpoint,
    save_checkpoint,
    score_trials,
    train,
)
from .embeddings import load_embedding_set
from .errors import ConfigError, FormatError, VtadError
from .metrics import (
    ScoredTrial,
    per_descriptor_report,
    render_report,
    report_averages,
    report_tsv,
)

_KNOWN_KEYS = {
    "embeddings",
    "annotations",
    "scenario",
    "seed",
    "out",
    "k_train",
    "k_eval",
    "eval_descriptors_male",
    "eval_descriptors_female",
    "holdout_fraction",
    "eval_fraction",
    "learning_rate",
    "batch_size",
    "epochs",
    "dropout",
    "bn_momentum",
    "optimizer",
    "hidden_size",
}


@dataclass
class RunConfig:
    embeddings_path: str
    annotations_path: str
    scenario: Scenario = Scenario.UNSEEN
    seed: int = 0
    out_dir: str = "."
    k_train: int = 20
    k_eval: int | None = None
    eval_descriptors: dict | None = None
    holdout_fraction: float = 0.2
    eval_fraction: float = 0.15
    learning_rate: float | None = None  # None -> derived from the encoder tag
    batch_size: int = 16
    epochs: int = 10
    dropout: float = 0.2
    bn_momentum: float = 0.1
    optimizer: str = "adam"
    hidden_size: int = 128


def _parse_kv_file(path: str) -> dict[str, str]:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


def _typed(kv: dict[str, str], path: str, key: str, cast, default):
    if key not in kv:
        return default
    try:
        return cast(kv[key])
    except (ValueError, TypeError):
        raise ConfigError(f"{path}: key {key!r} has unparsable value {kv[key]!r}") from None


def load_run_config(path: str, overrides: argparse.Namespace | None = None) -> RunConfig:
    """Parse + validate the flat config, applying any CLI flag overrides."""
    kv = _parse_kv_file(path)
    for required in ("embeddings", "annotations"):
        if required not in kv:
            raise ConfigError(f"{path}: missing required key {required!r}")
    catalog = build_catalog()
    eval_desc = None
    if "eval_descriptors_male" in kv or "eval_descriptors_female" in kv:
        eval_desc = {}
        for gender, key in (
            (Gender.MALE, "eval_descriptors_male"),
            (Gender.FEMALE, "eval_descriptors_female"),
        ):
            names = tuple(n.strip() for n in kv.get(key, "").split(",") if n.strip())
            eval_desc[gender] = tuple(catalog.canonical_name(gender, n) for n in names)
    try:
        scenario = Scenario.from_string(kv.get("scenario", "unseen"))
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    cfg = RunConfig(
        embeddings_path=kv["embeddings"],
        annotations_path=kv["annotations"],
        scenario=scenario,
        seed=_typed(kv, path, "seed", int, 0),
        out_dir=kv.get("out", "."),
        k_train=_typed(kv, path, "k_train", int, 20),
        k_eval=_typed(kv, path, "k_eval", int, None),
        eval_descriptors=eval_desc,
        holdout_fraction=_typed(kv, path, "holdout_fraction", float, 0.2),
        eval_fraction=_typed(kv, path, "eval_fraction", float, 0.15),
        learning_rate=_typed(kv, path, "learning_rate", float, None),
        batch_size=_typed(kv, path, "batch_size", int, 16),
        epochs=_typed(kv, path, "epochs", int, 10),
        dropout=_typed(kv, path, "dropout", float, 0.2),
        bn_momentum=_typed(kv, path, "bn_momentum", float, 0.1),
        optimizer=kv.get("optimizer", "adam"),
        hidden_size=_typed(kv, path, "hidden_size", int, 128),
    )
    if overrides is not None:
        if getattr(overrides, "seed", None) is not None:
            cfg.seed = overrides.seed
        if getattr(overrides, "scenario", None) is not None:
            try:
                cfg.scenario = Scenario.from_string(overrides.scenario)
            except ValueError as e:
                raise ConfigError(str(e)) from None
        if getattr(overrides, "out", None) is not None:
            cfg.out_dir = overrides.out
    for p, label in ((cfg.embeddings_path, "embeddings"), (cfg.annotations_path, "annotations")):
        if not os.path.isfile(p):
            raise ConfigError(f"{path}: {label} file not found: {p}")
    return cfg


def _train_config(cfg: RunConfig, encoder_tag: str) -> TrainConfig:
    lr = cfg.learning_rate if cfg.learning_rate is not None else default_learning_rate(encoder_tag)
    tc = TrainConfig(
        learning_rate=lr,
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        dropout_rate=cfg.dropout,
        bn_momentum=cfg.bn_momentum,
        optimizer=cfg.optimizer,
        rng_seed=cfg.seed,
        hidden_size=cfg.hidden_size,
    )
    tc.validate()
    return tc


def _split_plan(cfg: RunConfig, embeddings, records) -> SplitPlan:
    plan = split_scenario(
        records,
        cfg.scenario,
        eval_descriptors=cfg.eval_descriptors,
        rng_seed=cfg.seed,
        holdout_fraction=cfg.holdout_fraction,
        eval_fraction=cfg.eval_fraction,
        k_train=cfg.k_train,
        k_eval=cfg.k_eval,
    )
    return materialize_plan(plan, embeddings)


def _print_split_summary(plan: SplitPlan) -> None:
    catalog = build_catalog()
    t_m = [r for r in plan.train_records if r.gender is Gender.MALE]
    t_f = [r for r in plan.train_records if r.gender is Gender.FEMALE]
    print(f"scenario: {plan.scenario.value}  seed: {plan.rng_seed}")
    print(
        f"train: {len(plan.train_records)} records "
        f"(M {len(t_m)} / F {len(t_f)}), {len(plan.train_utterances)} speakers"
    )
    print(f"eval:  {len(plan.eval_records)} records, {len(plan.eval_utterances)} speakers")
    total_pairs = 0
    for gender in (Gender.MALE, Gender.FEMALE):
        names = plan.eval_descriptors.get(gender, ())
        if not names:
            continue
        print(f"eval descriptors ({gender.value}):")
        print(f"  {'descriptor':<12} {'#pairs':>7} {'#speakers':>10}")
        for name in names:
            recs = [r for r in plan.eval_records if r.gender is gender and name in r.descriptors]
            spks = {s for r in recs for s in (r.weaker_speaker, r.stronger_speaker)}
            total_pairs += len(recs)
            print(f"  {name:<12} {len(recs):>7} {len(spks):>10}")
    k2 = plan.k_eval * plan.k_eval
    print(
        f"eval trials: {total_pairs} pairs x {plan.k_eval}^2 = {total_pairs * k2} targets "
        f"+ {total_pairs * k2} nontargets"
    )


def cmd_split(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config, overrides=args)
    embeddings = load_embedding_set(cfg.embeddings_path)
    records = parse_annotations(cfg.annotations_path)
    plan = _split_plan(cfg, embeddings, records)
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest_path = os.path.join(cfg.out_dir, "split.manifest")
    save_manifest(plan, manifest_path)
    _print_split_summary(plan)
    print(f"wrote {manifest_path}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config, overrides=args)
    embeddings = load_embedding_set(cfg.embeddings_path)
    manifest_path = args.manifest or os.path.join(cfg.out_dir, "split.manifest")
    plan = load_manifest(manifest_path)
    samples = build_training_samples(plan.train_records, embeddings, plan)
    tc = _train_config(cfg, embeddings.encoder_tag)
    params, log = train(tc, samples, embeddings)
    os.makedirs(cfg.out_dir, exist_ok=True)
    ckpt_path = os.path.join(cfg.out_dir, "diffnet.ckpt")
    save_checkpoint(params, ckpt_path, train_config=tc)
    log_path = os.path.join(cfg.out_dir, "train.log")
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write(f"# samples={log.n_samples} dropped_batches={log.dropped_batches}\n")
        for epoch, loss in enumerate(log.epoch_losses, start=1):
            fh.write(f"{epoch}\t{loss!r}\n")
    for epoch, loss in enumerate(log.epoch_losses, start=1):
        print(f"epoch {epoch}: mean loss {loss:.6f}")
    print(f"wrote {ckpt_path}")
    return 0


_SCORES_HEADER = "#vtad-scores v1"


def _write_scores(path: str, trials, scores) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_SCORES_HEADER + "\n")
        fh.write("# spk_a\tutt_a\tspk_b\tutt_b\tdim\ttruth\tscore\n")
        for t, s in zip(trials, scores):
            fh.write(
                f"{t.utt_a[0]}\t{t.utt_a[1]}\t{t.utt_b[0]}\t{t.utt_b[1]}\t"
                f"{t.descriptor_dim}\t{t.truth}\t{float(s)!r}\n"
            )


def _read_scores(path: str) -> list[ScoredTrial]:
    out: list[ScoredTrial] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != _SCORES_HEADER:
            raise FormatError(f"{path}:1: expected header {_SCORES_HEADER!r}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 7:
                raise FormatError(f"{path}:{lineno}: expected 7 fields, got {len(parts)}")
            try:
                out.append(ScoredTrial(int(parts[4]), float(parts[6]), int(parts[5])))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: unparsable dim/truth/score") from None
    return out


def _emit_report(scored: list[ScoredTrial], out_dir: str | None) -> str:
    rows = per_descriptor_report(scored)
    rendered = render_report(rows)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
            fh.write(rendered)
        with open(os.path.join(out_dir, "report.tsv"), "w", encoding="utf-8") as fh:
            fh.write(report_tsv(rows))
        payload = {
            "rows": [
                {
                    "descriptor_dim": r.descriptor_dim,
                    "gender": r.gender.value,
                    "descriptor": r.name,
                    "n_target": r.n_target,
                    "n_nontarget": r.n_nontarget,
                    "acc_percent": r.acc_percent,
                    "eer_percent": r.eer_percent,
                    "eer_threshold": r.eer_threshold,
                }
                for r in rows
            ],
            "averages": {
                k: {"acc_percent": v[0], "eer_percent": v[1]}
                for k, v in report_averages(rows).items()
            },
        }
        with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return rendered


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config, overrides=args)
    embeddings = load_embedding_set(cfg.embeddings_path)
    manifest_path = args.manifest or os.path.join(cfg.out_dir, "split.manifest")
    plan = load_manifest(manifest_path)
    ckpt_path = args.checkpoint or os.path.join(cfg.out_dir, "diffnet.ckpt")
    params = load_checkpoint(ckpt_path)
    trials = build_trials(plan, embeddings)
    scores = score_trials(params, trials, embeddings)
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_scores(os.path.join(cfg.out_dir, "scores.tsv"), trials, scores)
    scored = [
        ScoredTrial(t.descriptor_dim, float(s), t.truth) for t, s in zip(trials, scores)
    ]
    rendered = _emit_report(scored, cfg.out_dir)
    print(rendered, end="")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    scored = _read_scores(args.scores)
    rendered = _emit_report(scored, args.out)
    print(rendered, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vtad", description="Voice timbre attribute detection toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="flat key=value run configuration")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument(
        "--scenario",
        choices=[s.value for s in Scenario],
        default=None,
        help="override the config scenario",
    )
    common.add_argument("--out", default=None, help="override the output directory")

    p_split = sub.add_parser("split", parents=[common], help="build and save a scenario split")
    p_split.set_defaults(func=cmd_split)

    p_train = sub.add_parser("train", parents=[common], help="train a comparator from a split")
    p_train.add_argument("--manifest", default=None, help="split manifest path (default <out>/split.manifest)")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", parents=[common], help="score trials and report metrics")
    p_eval.add_argument("--manifest", default=None, help="split manifest path (default <out>/split.manifest)")
    p_eval.add_argument("--checkpoint", default=None, help="checkpoint path (default <out>/diffnet.ckpt)")
    p_eval.set_defaults(func=cmd_eval)

    p_report = sub.add_parser("report", help="re-render a report from a scores file")
    p_report.add_argument("--scores", required=True, help="scores.tsv written by eval")
    p_report.add_argument("--out", default=None, help="also write report files here")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VtadError as e:
        print(f"vtad-error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Trial scoring metrics: equal error rate, accuracy, per-descriptor reports.

Score convention: accept (decide "hypothesis true") when score >= threshold
for EER, and strictly score > threshold for accuracy, so a score exactly at
the accuracy threshold counts as a false decision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .catalog import DescriptorCatalog, Gender, build_catalog
from .errors import EmptyInput, OneClassOnly


@dataclass(frozen=True)
class ScoredTrial:
    """One evaluated trial: confidence for its descriptor dim plus the truth bit."""

    descriptor_dim: int
    score: float
    truth: int  # 1 = target (ordered pair matches annotation), 0 = nontarget


@dataclass(frozen=True)
class DescriptorReport:
    """Per-descriptor evaluation summary. Percent fields are 0..100."""

    descriptor_dim: int
    gender: Gender
    name: str
    n_target: int
    n_nontarget: int
    acc_percent: float
    eer_percent: float
    eer_threshold: float


def compute_eer(scores: Sequence[tuple[float, int]]) -> tuple[float, float]:
    """Equal error rate and its threshold for (score, truth) pairs.

    Sweeps every distinct score plus sentinels below/above. With accept-if-
    score>=t: FPR(t) = fraction of nontargets >= t, FNR(t) = fraction of
    targets < t. FNR - FPR is nondecreasing in t; the EER is read at its zero:
    exactly when a sweep point has FNR == FPR (threshold = midpoint of the
    equality interval), otherwise linearly interpolated between the adjacent
    sweep points where the sign flips.

    Returns (eer, threshold), eer in [0, 1]. Raises OneClassOnly unless both
    classes are present.
    """
    tar = np.sort(np.asarray([s for s, t in scores if t == 1], dtype=np.float64))
    non = np.sort(np.asarray([s for s, t in scores if t == 0], dtype=np.float64))
    if tar.size == 0 or non.size == 0:
        raise OneClassOnly(
            f"EER needs both classes, got {tar.size} targets and {non.size} nontargets"
        )
    if not (np.isfinite(tar).all() and np.isfinite(non).all()):
        raise OneClassOnly("EER undefined for non-finite scores")

    distinct = np.unique(np.concatenate([tar, non]))
    thresholds = np.concatenate([[distinct[0] - 1.0], distinct, [distinct[-1] + 1.0]])
    # counts via binary search on the sorted class arrays
    fnr = np.searchsorted(tar, thresholds, side="left") / tar.size
    fpr = (non.size - np.searchsorted(non, thresholds, side="left")) / non.size
    diff = fnr - fpr

    zeros = np.flatnonzero(diff == 0.0)
    if zeros.size:
        i0, i1 = int(zeros[0]), int(zeros[-1])
        eer = float(fnr[i0])
        threshold = float((thresholds[i0] + thresholds[i1]) / 2.0)
        return eer, threshold

    k = int(np.flatnonzero(diff > 0.0)[0])  # diff[0] = -1, diff[-1] = +1
    a, b = float(diff[k - 1]), float(diff[k])
    u = a / (a - b)
    eer = float(fnr[k - 1] + u * (fnr[k] - fnr[k - 1]))
    threshold = float(thresholds[k - 1] + u * (thresholds[k] - thresholds[k - 1]))
    return eer, threshold


def compute_accuracy(scores: Sequence[tuple[float, int]], threshold: float = 0.5) -> float:
    """Fraction of trials decided correctly when predicting true iff score > threshold."""
    if len(scores) == 0:
        raise EmptyInput("accuracy over zero trials is undefined")
    arr = np.asarray([[s, t] for s, t in scores], dtype=np.float64)
    predicted = arr[:, 0] > threshold
    actual = arr[:, 1] == 1.0
    return float(np.mean(predicted == actual))


def per_descriptor_report(
    trials: Iterable[ScoredTrial],
    catalog: DescriptorCatalog | None = None,
    acc_threshold: float = 0.5,
) -> list[DescriptorReport]:
    """Group scored trials by descriptor dim; ACC and EER per group.

    Every group must contain both classes (OneClassOnly otherwise). Rows come
    back sorted by descriptor index.
    """
    catalog = catalog or build_catalog()
    groups: dict[int, list[tuple[float, int]]] = {}
    for t in trials:
        groups.setdefault(t.descriptor_dim, []).append((t.score, t.truth))
    if not groups:
        raise EmptyInput("no scored trials to report on")
    rows = []
    for dim in sorted(groups):
        pairs = groups[dim]
        desc = catalog.descriptor_at(dim)
        try:
            eer, thr = compute_eer(pairs)
        except OneClassOnly as e:
            raise OneClassOnly(f"descriptor {desc}: {e}") from None
        acc = compute_accuracy(pairs, threshold=acc_threshold)
        rows.append(
            DescriptorReport(
                descriptor_dim=dim,
                gender=desc.gender,
                name=desc.name,
                n_target=sum(1 for _, t in pairs if t == 1),
                n_nontarget=sum(1 for _, t in pairs if t == 0),
                acc_percent=100.0 * acc,
                eer_percent=100.0 * eer,
                eer_threshold=thr,
            )
        )
    return rows


def report_averages(rows: Sequence[DescriptorReport]) -> dict[str, tuple[float, float]]:
    """Unweighted (ACC%, EER%) means across descriptors, per gender plus overall.

    Keys: 'M', 'F' (when that gender has rows) and 'all'.
    """
    if not rows:
        raise EmptyInput("no report rows to average")
    out: dict[str, tuple[float, float]] = {}
    for gender in (Gender.MALE, Gender.FEMALE):
        sub = [r for r in rows if r.gender == gender]
        if sub:
            out[gender.value] = (
                float(np.mean([r.acc_percent for r in sub])),
                float(np.mean([r.eer_percent for r in sub])),
            )
    out["all"] = (
        float(np.mean([r.acc_percent for r in rows])),
        float(np.mean([r.eer_percent for r in rows])),
    )
    return out


def render_report(rows: Sequence[DescriptorReport]) -> str:
    """Human-readable table, percentages to 2 decimals, Avg row per gender."""
    lines = [f"{'gender':<6} {'descriptor':<12} {'#tgt':>7} {'#non':>7} {'ACC%':>7} {'EER%':>7} {'thr':>10}"]
    avgs = report_averages(rows)
    for gender in (Gender.MALE, Gender.FEMALE):
        sub = [r for r in rows if r.gender == gender]
        if not sub:
            continue
        for r in sub:
            lines.append(
                f"{r.gender.value:<6} {r.name:<12} {r.n_target:>7} {r.n_nontarget:>7} "
                f"{r.acc_percent:>7.2f} {r.eer_percent:>7.2f} {r.eer_threshold:>10.6f}"
            )
        a_acc, a_eer = avgs[gender.value]
        lines.append(f"{gender.value:<6} {'Avg':<12} {'':>7} {'':>7} {a_acc:>7.2f} {a_eer:>7.2f} {'':>10}")
    a_acc, a_eer = avgs["all"]
    lines.append(f"{'all':<6} {'Avg':<12} {'':>7} {'':>7} {a_acc:>7.2f} {a_eer:>7.2f} {'':>10}")
    return "\n".join(lines) + "\n"


def report_tsv(rows: Sequence[DescriptorReport]) -> str:
    """Machine-oriented TSV with the same fields plus Avg rows."""
    lines = ["gender\tdescriptor\tn_target\tn_nontarget\tacc_percent\teer_percent\teer_threshold"]
    avgs = report_averages(rows)
    for r in rows:
        lines.append(
            f"{r.gender.value}\t{r.name}\t{r.n_target}\t{r.n_nontarget}\t"
            f"{r.acc_percent:.2f}\t{r.eer_percent:.2f}\t{r.eer_threshold!r}"
        )
    for key in ("M", "F", "all"):
        if key in avgs:
            a_acc, a_eer = avgs[key]
            lines.append(f"{key}\tAvg\t\t\t{a_acc:.2f}\t{a_eer:.2f}\t")
    return "\n".join(lines) + "\n"

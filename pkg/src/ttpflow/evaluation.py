"""Classification metrics, threshold sweeps, ROC/AUC, and cross-seed aggregation."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import DataError
from .flows import MALICIOUS


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def predicted_positive(self) -> int:
        return self.tp + self.fp


@dataclass(frozen=True)
class Metrics:
    """The five headline metrics; `degenerate` is set when any denominator was 0."""

    accuracy: float
    precision: float
    tpr: float
    fpr: float
    f1: float
    degenerate: bool = False


def _ratio(num: int, den: int) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def metrics(counts: ConfusionCounts) -> Metrics:
    """Accuracy, precision, TPR, FPR, and F1 from one confusion matrix.

    Zero-denominator ratios evaluate to 0 and set the degenerate flag instead
    of raising, so sweeps stay total at extreme thresholds. An entirely empty
    matrix is an error.
    """
    if counts.total == 0:
        raise DataError("cannot compute metrics over zero samples")
    accuracy = (counts.tp + counts.tn) / counts.total
    precision, d1 = _ratio(counts.tp, counts.tp + counts.fp)
    tpr, d2 = _ratio(counts.tp, counts.tp + counts.fn)
    fpr, d3 = _ratio(counts.fp, counts.fp + counts.tn)
    if precision + tpr == 0.0:
        f1, d4 = 0.0, True
    else:
        f1, d4 = 2.0 * precision * tpr / (precision + tpr), False
    return Metrics(accuracy, precision, tpr, fpr, f1, degenerate=d1 or d2 or d3 or d4)


@dataclass(frozen=True)
class SampleStats:
    """Per-sample aggregation inputs: technique count, flow count, percentage."""

    n_t: int
    n_f: int
    p: float


def decide(policy: str, stats: SampleStats, threshold: float) -> bool:
    """Apply one policy's inclusive threshold to precomputed sample statistics."""
    if policy == "p1":
        return stats.n_t >= threshold
    if policy == "p2":
        return stats.n_f >= threshold
    if policy == "p3":
        return stats.p >= threshold
    raise DataError(f"unknown policy '{policy}'")


def confusion(decisions: Mapping[str, bool], labels: Mapping[str, str]) -> ConfusionCounts:
    tp = fp = tn = fn = 0
    for sample_hash, positive in decisions.items():
        truth = labels[sample_hash] == MALICIOUS
        if positive and truth:
            tp += 1
        elif positive and not truth:
            fp += 1
        elif not positive and truth:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, tn, fn)


def sweep(policy: str, thresholds: Sequence[float],
          sample_stats: Mapping[str, SampleStats],
          labels: Mapping[str, str]) -> list[tuple[float, ConfusionCounts]]:
    """One confusion matrix per threshold; flow verdicts are reused throughout.

    The per-sample statistics are computed once from the flow verdicts; only
    the threshold comparison reruns per sweep point.
    """
    result = []
    for threshold in thresholds:
        decisions = {
            sample_hash: decide(policy, stats, threshold)
            for sample_hash, stats in sample_stats.items()
        }
        result.append((threshold, confusion(decisions, labels)))
    return result


def default_thresholds(policy: str, sample_stats: Mapping[str, SampleStats]) -> list[float]:
    """Sweep ranges: integer θ up to one past the observed maximum; percent 0..100."""
    if policy == "p3":
        return [float(v) for v in range(0, 101)]
    if policy == "p1":
        top = max((s.n_t for s in sample_stats.values()), default=0)
    else:
        top = max((s.n_f for s in sample_stats.values()), default=0)
    return [float(v) for v in range(1, top + 2)]


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]  # (fpr, tpr), sorted by fpr
    auc: float


def trapezoid_auc(points: Sequence[tuple[float, float]]) -> float:
    """Trapezoidal integral of (fpr, tpr) points after sorting by fpr."""
    ordered = sorted(points)
    area = 0.0
    for (x0, y0), (x1, y1) in zip(ordered, ordered[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def roc_auc(sweep_result: Sequence[tuple[float, ConfusionCounts]],
            labels: Mapping[str, str]) -> RocCurve:
    """ROC points for a sweep, anchored at (0,0) and (1,1), with trapezoid AUC.

    Raises :class:`DataError` when the labels contain a single class, since
    TPR or FPR would be undefined.
    """
    positives = sum(1 for v in labels.values() if v == MALICIOUS)
    negatives = len(labels) - positives
    if positives == 0 or negatives == 0:
        raise DataError("ROC requires both classes in the evaluated labels")
    points = {(0.0, 0.0), (1.0, 1.0)}
    for _, counts in sweep_result:
        points.add((counts.fp / negatives, counts.tp / positives))
    ordered = tuple(sorted(points))
    return RocCurve(ordered, trapezoid_auc(ordered))


@dataclass(frozen=True)
class SeedAggregate:
    mean: float
    ci95: float
    stddev: float


def aggregate_seeds(values: Sequence[float]) -> SeedAggregate:
    """Sample mean, 95% CI halfwidth (normal approximation), and sample stddev."""
    if len(values) < 2:
        raise DataError("seed aggregation requires at least two values")
    n = len(values)
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / (n - 1)
    stddev = math.sqrt(variance)
    return SeedAggregate(mean, 1.96 * stddev / math.sqrt(n), stddev)


# -- exports ----------------------------------------------------------------

def write_sweep_table(rows: Sequence[tuple[float, Metrics]], dest) -> None:
    """Tab-separated threshold, accuracy, precision, tpr, fpr, f1 per line."""
    with _open_w(dest) as stream:
        stream.write("threshold\taccuracy\tprecision\ttpr\tfpr\tf1\n")
        for threshold, m in rows:
            stream.write(
                f"{threshold:g}\t{m.accuracy:.6f}\t{m.precision:.6f}"
                f"\t{m.tpr:.6f}\t{m.fpr:.6f}\t{m.f1:.6f}\n"
            )


def write_roc(curve: RocCurve, dest) -> None:
    """Tab-separated (fpr, tpr) lines followed by a trailing auc line."""
    with _open_w(dest) as stream:
        stream.write("fpr\ttpr\n")
        for fpr, tpr in curve.points:
            stream.write(f"{fpr:.6f}\t{tpr:.6f}\n")
        stream.write(f"auc\t{curve.auc:.6f}\n")


def _open_w(dest):
    if isinstance(dest, (str, os.PathLike)):
        return open(dest, "w", encoding="utf-8", newline="")
    import contextlib

    return contextlib.nullcontext(dest)

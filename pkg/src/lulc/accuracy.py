"""Confusion matrix and accuracy metrics.

Orientation: rows are the reference class, columns the classified class, so
row sums are reference totals and column sums classified totals. The opposite
convention is also common; every function here assumes this one.

Metrics are computed as exact rationals and returned as floats. Integer
percentages (round half up) are only produced for report rendering.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from lulc.errors import MetricError, ValidationError
from lulc.raster import ClassLegend, ClassMap, map_to_pixel_array


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    legend: ClassLegend
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        k = len(self.legend)
        if counts.shape != (k, k):
            raise ValidationError(f"counts must be {k}x{k}, got {counts.shape}")
        if (counts < 0).any():
            raise ValidationError("confusion counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def reference_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def classified_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> np.ndarray:
        return np.diag(self.counts)

    def cell(self, reference: int, classified: int) -> int:
        return int(self.counts[self.legend.index_of(reference), self.legend.index_of(classified)])

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.legend == other.legend and np.array_equal(self.counts, other.counts)

    __hash__ = None


def confusion_matrix(reference: Sequence[int], predicted: Sequence[int], legend: ClassLegend) -> ConfusionMatrix:
    reference = np.asarray(reference, dtype=np.int64).reshape(-1)
    predicted = np.asarray(predicted, dtype=np.int64).reshape(-1)
    if len(reference) != len(predicted):
        raise ValidationError(f"{len(reference)} reference labels vs {len(predicted)} predicted")
    ids = np.array(legend.ids)
    lookup = np.full(256, -1, dtype=np.int64)
    lookup[ids] = np.arange(len(ids))
    for name, arr in (("reference", reference), ("predicted", predicted)):
        bad = (arr < 0) | (arr > 255)
        if not bad.any():
            bad = lookup[arr] < 0
        if bad.any():
            raise ValidationError(f"{name} label {int(arr[np.argmax(bad)])} not in legend")
    k = len(ids)
    flat = lookup[reference] * k + lookup[predicted]
    counts = np.bincount(flat, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(legend, counts)


def _require_total(cm: ConfusionMatrix) -> int:
    n = cm.total
    if n <= 0:
        raise MetricError("confusion matrix is empty")
    return n


def overall_accuracy_fraction(cm: ConfusionMatrix) -> Fraction:
    n = _require_total(cm)
    return Fraction(int(np.trace(cm.counts)), n)


def overall_accuracy(cm: ConfusionMatrix) -> float:
    return float(overall_accuracy_fraction(cm))


def producers_accuracy_fraction(cm: ConfusionMatrix, c: int) -> Fraction:
    i = cm.legend.index_of(c)
    total = int(cm.reference_totals[i])
    if total == 0:
        raise MetricError(f"class {c} ({cm.legend.name_of(c)}) has no reference samples")
    return Fraction(int(cm.counts[i, i]), total)


def producers_accuracy(cm: ConfusionMatrix, c: int) -> float:
    return float(producers_accuracy_fraction(cm, c))


def users_accuracy_fraction(cm: ConfusionMatrix, c: int) -> Fraction:
    i = cm.legend.index_of(c)
    total = int(cm.classified_totals[i])
    if total == 0:
        raise MetricError(f"class {c} ({cm.legend.name_of(c)}) was never classified")
    return Fraction(int(cm.counts[i, i]), total)


def users_accuracy(cm: ConfusionMatrix, c: int) -> float:
    return float(users_accuracy_fraction(cm, c))


def kappa_fraction(cm: ConfusionMatrix) -> Fraction:
    n = _require_total(cm)
    p_o = Fraction(int(np.trace(cm.counts)), n)
    rows = [int(v) for v in cm.reference_totals]
    cols = [int(v) for v in cm.classified_totals]
    p_e = Fraction(sum(r * c for r, c in zip(rows, cols)), n * n)
    if p_e == 1:
        raise MetricError("kappa undefined: chance agreement is 1")
    return (p_o - p_e) / (1 - p_e)


def kappa(cm: ConfusionMatrix) -> float:
    """Cohen's kappa, ``(p_o - p_e) / (1 - p_e)``."""
    return float(kappa_fraction(cm))


def percent_half_up(value: Fraction) -> int:
    """``round(100 * value)`` with halves rounded up, exactly."""
    v = Fraction(value) * 100
    return int((2 * v.numerator + v.denominator) // (2 * v.denominator))


@dataclass(frozen=True)
class AccuracyRow:
    class_id: int
    name: str
    reference_total: int
    classified_total: int
    number_correct: int
    producer_pct: int | None
    user_pct: int | None


def accuracy_rows(cm: ConfusionMatrix) -> list[AccuracyRow]:
    """One row per class, with the integer percentages used in reports.

    A percentage whose denominator is zero is ``None``.
    """
    rows = []
    for i, (c, name) in enumerate(cm.legend):
        ref, cls_ = int(cm.reference_totals[i]), int(cm.classified_totals[i])
        correct = int(cm.counts[i, i])
        rows.append(
            AccuracyRow(
                c,
                name,
                ref,
                cls_,
                correct,
                percent_half_up(Fraction(correct, ref)) if ref else None,
                percent_half_up(Fraction(correct, cls_)) if cls_ else None,
            )
        )
    return rows


def labels_at(cmap: ClassMap, xs, ys) -> np.ndarray:
    """Class id at each map point; off-raster points raise."""
    cols, rows, inside = map_to_pixel_array(cmap.grid, xs, ys)
    if not inside.all():
        i = int(np.flatnonzero(~inside)[0])
        raise ValidationError(f"point {i} lies outside the class map")
    labels = cmap.classes[rows, cols]
    valid = cmap.valid_mask()[rows, cols]
    if not valid.all():
        i = int(np.flatnonzero(~valid)[0])
        raise ValidationError(f"point {i} falls on a nodata pixel of the class map")
    return labels.astype(np.int64)

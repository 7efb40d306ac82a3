"""Pixel-level evaluation of a predicted mask against a ground-truth mask."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DimensionMismatch
from .masks import BinaryMask


@dataclass(frozen=True)
class EvalMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    # Ratios are None when their denominator is empty; a silent 0 or 1 would
    # corrupt aggregate statistics.
    precision: float | None
    recall: float | None
    f1: float | None
    iou: float | None

    def to_json(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "precision": self.precision, "recall": self.recall,
                "f1": self.f1, "iou": self.iou}

    def table_row(self, label: str = "scene") -> str:
        def fmt(value):
            return "n/a" if value is None else f"{value:.2f}"
        return (f"{label}  precision={fmt(self.precision)}  "
                f"recall={fmt(self.recall)}  f1={fmt(self.f1)}")


def _from_counts(tp: int, fp: int, fn: int, tn: int) -> EvalMetrics:
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    iou = tp / (tp + fp + fn) if tp + fp + fn > 0 else None
    return EvalMetrics(tp=tp, fp=fp, fn=fn, tn=tn, precision=precision,
                       recall=recall, f1=f1, iou=iou)


def evaluate(pred: BinaryMask, truth: BinaryMask) -> EvalMetrics:
    if (pred.width, pred.height) != (truth.width, truth.height):
        raise DimensionMismatch(
            f"prediction is {pred.width}x{pred.height}, "
            f"truth is {truth.width}x{truth.height}")
    p = pred.to_bitmap()
    t = truth.to_bitmap()
    tp = int((p & t).sum())
    fp = int((p & ~t).sum())
    fn = int((~p & t).sum())
    tn = int((~p & ~t).sum())
    return _from_counts(tp, fp, fn, tn)


def micro_average(results: list[EvalMetrics]) -> EvalMetrics:
    """Pool confusion counts over scenes before forming the ratios."""
    if not results:
        raise ValueError("micro_average needs at least one result")
    return _from_counts(tp=sum(r.tp for r in results),
                        fp=sum(r.fp for r in results),
                        fn=sum(r.fn for r in results),
                        tn=sum(r.tn for r in results))

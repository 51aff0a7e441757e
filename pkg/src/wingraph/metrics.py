"""Segmentation metrics: confusion matrix, IoU, boundary-band accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


class EmptyBandError(ValueError):
    """The target has no class boundary, so the band metric is undefined."""


@dataclass
class MiouResult:
    """Per-class IoU (nan for classes absent from both sides) and the mean
    over the present classes; the raw confusion matrix sums to the pixel
    count."""

    per_class: list[float]
    mean: float
    confusion: np.ndarray


def confusion_matrix(pred: np.ndarray, target: np.ndarray, num_classes: int) -> np.ndarray:
    """counts[t][p] = pixels with target class t predicted as p."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {list(pred.shape)} != target shape {list(target.shape)}")
    flat = target.reshape(-1) * num_classes + pred.reshape(-1)
    return np.bincount(flat, minlength=num_classes ** 2).reshape(num_classes, num_classes)


def iou_from_confusion(confusion: np.ndarray) -> tuple[list[float], float]:
    """Per-class IoU = TP / (TP + FP + FN); absent classes become nan and
    are excluded from the mean."""
    tp = np.diagonal(confusion).astype(np.float64)
    fn = confusion.sum(axis=1) - tp
    fp = confusion.sum(axis=0) - tp
    denom = tp + fp + fn
    per_class = [tp[c] / denom[c] if denom[c] > 0 else math.nan for c in range(confusion.shape[0])]
    present = [v for v in per_class if not math.isnan(v)]
    if not present:
        raise ValueError("no class present in prediction or target")
    return per_class, float(sum(present) / len(present))


def miou(pred: np.ndarray, target: np.ndarray, num_classes: int) -> MiouResult:
    cm = confusion_matrix(pred, target, num_classes)
    per_class, mean = iou_from_confusion(cm)
    return MiouResult(per_class, mean, cm)


def evaluate_miou(model, dataset: list[tuple[Tensor, np.ndarray]]) -> MiouResult:
    """Accumulate one confusion matrix over the whole dataset."""
    if not dataset:
        raise ValueError("evaluate_miou: empty dataset")
    num_classes = model.config.num_classes
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    for image, labels in dataset:
        cm += confusion_matrix(model.predict(image), labels, num_classes)
    per_class, mean = iou_from_confusion(cm)
    return MiouResult(per_class, mean, cm)


def pixel_accuracy(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {list(pred.shape)} != target shape {list(target.shape)}")
    return float((pred == target).mean())


def boundary_band(target: np.ndarray, band: int) -> np.ndarray:
    """Boolean mask of pixels within ``band`` Chebyshev steps of a class change.

    A pixel belongs to the band iff some pixel at Chebyshev distance <= band
    carries a different label.  band=1 marks exactly the pixels flanking a
    boundary (both sides of it).
    """
    if band < 1:
        raise ValueError(f"band must be >= 1, got {band}")
    target = np.asarray(target)
    h, w = target.shape
    mask = np.zeros((h, w), dtype=bool)
    for dy in range(-band, band + 1):
        for dx in range(-band, band + 1):
            if dy == 0 and dx == 0:
                continue
            ny, nx = h - abs(dy), w - abs(dx)
            if ny <= 0 or nx <= 0:
                continue
            ys = slice(max(0, -dy), max(0, -dy) + ny)
            xs = slice(max(0, -dx), max(0, -dx) + nx)
            ys_nb = slice(max(0, dy), max(0, dy) + ny)
            xs_nb = slice(max(0, dx), max(0, dx) + nx)
            mask[ys, xs] |= target[ys, xs] != target[ys_nb, xs_nb]
    return mask


def boundary_band_accuracy(pred: np.ndarray, target: np.ndarray, band: int) -> float:
    """Pixel accuracy restricted to the boundary band of the target."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {list(pred.shape)} != target shape {list(target.shape)}")
    mask = boundary_band(target, band)
    if not mask.any():
        raise EmptyBandError("target has no class boundary")
    return float((pred[mask] == target[mask]).mean())


def dataset_boundary_band_accuracy(model, dataset: list[tuple[Tensor, np.ndarray]], band: int = 1) -> float:
    """Boundary-band accuracy pooled over every sample's band pixels."""
    correct = 0
    total = 0
    for image, labels in dataset:
        mask = boundary_band(labels, band)
        if not mask.any():
            continue
        pred = model.predict(image)
        correct += int((pred[mask] == labels[mask]).sum())
        total += int(mask.sum())
    if total == 0:
        raise EmptyBandError("no sample in the dataset has a class boundary")
    return correct / total


def write_iou_csv(path, per_class: list[float]) -> None:
    """CSV report with header ``class_id,iou``."""
    lines = ["class_id,iou"]
    for class_id, value in enumerate(per_class):
        lines.append(f"{class_id},{'nan' if math.isnan(value) else repr(value)}")
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")

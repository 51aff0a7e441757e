"""Plain SGD training on per-pixel cross entropy.

One sample per step, taken round-robin from the dataset; no momentum, no
schedule, no augmentation.  The whole trajectory is a deterministic
function of the model seed and the dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import pixel_accuracy
from .model import Segmenter
from .tensor import Tensor, backward, cross_entropy_logits


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; the run is aborted with diagnostics."""


@dataclass
class TrainingReport:
    """Loss curve plus end-of-run summary."""

    losses: list[float] = field(default_factory=list)
    final_loss: float = math.nan
    final_pixel_accuracy: float = math.nan
    steps: int = 0
    param_count: int = 0


def train(model: Segmenter, dataset: list[tuple[Tensor, np.ndarray]], steps: int,
          lr: float, freeze_ba_until: int = 0) -> TrainingReport:
    """Run ``steps`` SGD updates and report the recorded curve.

    ``freeze_ba_until`` holds the boundary-attention parameters fixed for
    the first given number of steps, a small stand-in for training the
    backbone first and the boundary gate afterwards.
    """
    if not dataset:
        raise ValueError("train: empty dataset")
    if lr <= 0:
        raise ValueError(f"train: lr must be positive, got {lr}")
    report = TrainingReport(param_count=model.param_count())
    for step in range(steps):
        image, labels = dataset[step % len(dataset)]
        model.zero_grad()
        loss = cross_entropy_logits(model.forward(image), labels)
        value = loss.item()
        if not math.isfinite(value):
            raise TrainingDiverged(f"non-finite loss {value} at step {step} (lr={lr})")
        report.losses.append(value)
        backward(loss)
        for name, p in model.parameters().items():
            if step < freeze_ba_until and name.startswith("ba."):
                continue
            if p.grad is not None:
                p.data -= lr * p.grad
    report.steps = steps
    if report.losses:
        report.final_loss = report.losses[-1]
    report.final_pixel_accuracy = evaluate_pixel_accuracy(model, dataset)
    return report


def evaluate_pixel_accuracy(model: Segmenter, dataset: list[tuple[Tensor, np.ndarray]]) -> float:
    correct = 0
    total = 0
    for image, labels in dataset:
        pred = model.predict(image)
        correct += int((pred == labels).sum())
        total += labels.size
    return correct / total if total else math.nan

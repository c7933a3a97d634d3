"""Class-balanced minibatch mixing for the two-branch trainer.

Every batch is half Lesion, half negative.  With probability
``mix_weak_prob`` the Lesion half comes from the weakly labelled pool
(classification term only); otherwise it comes from the annotated pool and
the batch also drives the localisation term.  Pools are sampled without
replacement when large enough, with replacement otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..manifest import ExamRecord


@dataclass
class BatchPlan:
    records: list[ExamRecord]
    targets: np.ndarray  # [B] 0/1
    annotated: bool  # True when the Lesion half carries boxes


class MixedBatchSampler:
    def __init__(
        self,
        train_records: list[ExamRecord],
        batch_size: int,
        mix_weak_prob: float,
        task: str,
        rng: np.random.Generator,
    ):
        self.batch_size = batch_size
        self.mix_weak_prob = mix_weak_prob
        self.rng = rng
        negative_classes = ("Normal",) if task == "lesion-vs-normal" else ("Normal", "Others")
        self.weak_lesion = [r for r in train_records if r.weak_label == "Lesion"]
        self.negatives = [r for r in train_records if r.weak_label in negative_classes]
        # annotated pool: box-carrying exams whose weak label still says Lesion
        self.annotated = [r for r in self.weak_lesion if r.annotated and r.boxes]
        if not self.weak_lesion:
            raise ConfigError("no weakly labelled Lesion exams in the training split")
        if not self.negatives:
            raise ConfigError("no negative exams in the training split")

    def _sample(self, pool: list[ExamRecord], n: int) -> list[ExamRecord]:
        idx = self.rng.choice(len(pool), size=n, replace=len(pool) < n)
        return [pool[int(i)] for i in idx]

    def draw(self) -> BatchPlan:
        half = self.batch_size // 2
        use_annotated = bool(self.annotated) and self.rng.random() >= self.mix_weak_prob
        positives = self._sample(self.annotated if use_annotated else self.weak_lesion, half)
        negatives = self._sample(self.negatives, self.batch_size - half)
        records = positives + negatives
        targets = np.array([1] * len(positives) + [0] * len(negatives), dtype=np.int64)
        return BatchPlan(records=records, targets=targets, annotated=use_annotated)

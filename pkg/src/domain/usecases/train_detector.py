from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from application.services.detector import build_model, extract, model_inputs
from application.services.grod_engine import grod_augment_batch, new_state
from application.services.loss import loss_grad_logits, loss_l1, loss_l2, loss_total
from application.services.metrics import auroc
from application.services.optimizers import Optimizer, build_optimizer
from application.services.postprocess import adjust_logits, msp_score
from application.services.seeding import derive_seed, make_rng
from application.services.transformer import (
    backward_from_hidden,
    flatten_hidden,
    forward_with_cache,
    head_backward,
    head_forward,
    unflatten_hidden,
)
from config.experiment import ExperimentConfig
from domain.errors import EmptyClass, EmptyInput, NotPositiveDefinite

from ..entities.features import FeatureBatch
from ..entities.grod import FakeOodBatch, GrodConfig, GrodState
from ..entities.model import TransformerModel
from ..entities.report import TrainingSummary
from ..ports.services import TelemetrySink

logger = logging.getLogger("grodlab.train")

# seed-derivation streams
_SPLIT, _INIT, _SHUFFLE, _GROD, _VALIDATION = range(5)


@dataclass
class TrainingResult:
    model: TransformerModel
    state: GrodState
    summary: TrainingSummary
    fake_ood: Optional[FakeOodBatch] = None
    fake_ood_rows: List[Dict[str, Any]] = field(default_factory=list)


def split_validation(batch: FeatureBatch, fraction: float, seed: int) -> Tuple[FeatureBatch, Optional[FeatureBatch]]:
    """Seeded hold-out of ``floor(fraction * n)`` rows; none when that is under 2 rows."""
    held_out = int(np.floor(fraction * batch.rows))
    if held_out < 2 or batch.rows - held_out < 2:
        return batch, None
    order = make_rng(derive_seed(seed, _SPLIT)).permutation(batch.rows)
    return batch.subset(np.sort(order[held_out:])), batch.subset(np.sort(order[:held_out]))


def fake_ood_rows(fake: FakeOodBatch) -> List[Dict[str, Any]]:
    """Flat rows: provenance, features ``f0..``, then 1-based soft label columns."""
    rows: List[Dict[str, Any]] = []
    for point, label_row, source in zip(fake.points, fake.soft_labels, fake.provenance):
        row: Dict[str, Any] = {"provenance": source.label()}
        row.update({f"f{j}": float(value) for j, value in enumerate(point)})
        row.update({f"y{j + 1}": float(value) for j, value in enumerate(label_row)})
        rows.append(row)
    return rows


class TrainDetector:
    """Warmup, then GROD-augmented epochs; keeps the epoch with the best validation AUROC."""

    def __init__(self, telemetry: Optional[TelemetrySink] = None) -> None:
        self.telemetry = telemetry

    def execute(
        self,
        train: FeatureBatch,
        config: ExperimentConfig,
        seed: int,
        head_only: bool = False,
    ) -> TrainingResult:
        if train.rows == 0:
            raise EmptyInput("training set is empty")
        num_classes = train.num_classes
        grod_config = config.grod()
        fit, validation = split_validation(train, config.validation_fraction, seed)
        model = build_model(train.dim, num_classes, config.budget(), config.depth, derive_seed(seed, _INIT), head_only)
        optimizer = build_optimizer(config.optimizer, config.lr, config.weight_decay)
        state = new_state(grod_config)
        shuffle_rng = make_rng(derive_seed(seed, _SHUFFLE))
        labels = fit.hard_labels()

        summary = TrainingSummary()
        best_model = model.copy()
        best_score: Optional[float] = None
        last_fake: Optional[FakeOodBatch] = None
        batch_counter = 0

        for epoch in range(config.epochs):
            totals = {"l1": 0.0, "l2": 0.0, "loss": 0.0, "retained": 0, "batches": 0}
            epoch_fake: List[FakeOodBatch] = []
            order = shuffle_rng.permutation(fit.rows)
            for start in range(0, fit.rows, config.batch_size):
                index = order[start : start + config.batch_size]
                try:
                    state, fake, stats = self._train_batch(
                        model,
                        optimizer,
                        state,
                        fit.features[index],
                        labels[index],
                        grod_config,
                        config.gamma,
                        num_classes,
                        derive_seed(seed, _GROD, epoch, batch_counter),
                        head_only,
                    )
                except NotPositiveDefinite as exc:
                    raise exc.with_batch(batch_counter) from exc
                batch_counter += 1
                for key in ("l1", "l2", "loss"):
                    totals[key] += stats[key]
                totals["retained"] += stats["retained"]
                totals["batches"] += 1
                if fake is not None:
                    epoch_fake.append(fake)
                if self.telemetry:
                    self.telemetry.record_histogram(
                        "grod.retained_fake_ood", float(stats["retained"]), bucket_size=1.0
                    )
            last_fake = _concat_fake(epoch_fake) if epoch_fake else None

            score = self._validation_auroc(model, validation, state, grod_config, num_classes, seed, epoch)
            batches = max(1, totals["batches"])
            entry = {
                "epoch": epoch,
                "l1": totals["l1"] / batches,
                "l2": totals["l2"] / batches,
                "loss": totals["loss"] / batches,
                "retained_fake_ood": int(totals["retained"]),
                "validation_auroc": score,
                "lambda_filter": float(state.lambda_filter),
            }
            summary.epochs.append(entry)
            if self.telemetry:
                self.telemetry.record_metric("train.epoch", entry)
            logger.info("Epoch finished", extra=entry)

            if score is not None and (best_score is None or score > best_score):
                best_model, best_score, summary.best_epoch = model.copy(), score, epoch
            elif best_score is None:
                # no validation signal yet: keep the latest weights
                best_model, summary.best_epoch = model.copy(), epoch

        summary.best_validation_auroc = best_score
        rows = fake_ood_rows(last_fake) if (config.dump_fake_ood and last_fake is not None) else []
        return TrainingResult(model=best_model, state=state, summary=summary, fake_ood=last_fake, fake_ood_rows=rows)

    def _train_batch(
        self,
        model: TransformerModel,
        optimizer: Optimizer,
        state: GrodState,
        features: np.ndarray,
        labels: np.ndarray,
        grod_config: GrodConfig,
        gamma: float,
        num_classes: int,
        seed: int,
        head_only: bool,
    ) -> Tuple[GrodState, Optional[FakeOodBatch], Dict[str, float]]:
        hidden, _, cache = forward_with_cache(model, model_inputs(features))
        augmented, state = grod_augment_batch(flatten_hidden(hidden), labels, state, grod_config, num_classes, seed)
        effective_gamma = 0.0 if augmented.warmup else gamma

        logits, head_pre = head_forward(model, augmented.features)
        grad = loss_grad_logits(augmented.labels, logits, effective_gamma)
        grads, d_features = head_backward(model, augmented.features, head_pre, grad)
        if not head_only:
            d_hidden = unflatten_hidden(model, d_features[: augmented.num_id])
            grads.update(backward_from_hidden(model, cache, d_hidden))
        optimizer.step(model, grads)

        stats = {
            "l1": loss_l1(augmented.labels, logits),
            "l2": loss_l2(augmented.labels, logits),
            "loss": loss_total(augmented.labels, logits, effective_gamma),
            "retained": augmented.num_fake,
        }
        return state, augmented.fake, stats

    def _validation_auroc(
        self,
        model: TransformerModel,
        validation: Optional[FeatureBatch],
        state: GrodState,
        grod_config: GrodConfig,
        num_classes: int,
        seed: int,
        epoch: int,
    ) -> Optional[float]:
        """AUROC of ID validation rows against fake OOD generated around them; ``None`` when none can be made."""
        if validation is None or not state.initialized:
            return None
        features, logits = extract(model, validation.features)
        augmented, _ = grod_augment_batch(
            features,
            validation.hard_labels(),
            state,
            grod_config,
            num_classes,
            derive_seed(seed, _VALIDATION, epoch),
        )
        if augmented.fake is None:
            return None
        fake_logits, _ = head_forward(model, augmented.fake.points)
        try:
            return auroc(msp_score(adjust_logits(logits)), msp_score(adjust_logits(fake_logits)))
        except EmptyClass:
            return None


def _concat_fake(batches: List[FakeOodBatch]) -> FakeOodBatch:
    return FakeOodBatch(
        points=np.concatenate([b.points for b in batches], axis=0),
        soft_labels=np.concatenate([b.soft_labels for b in batches], axis=0),
        provenance=[p for b in batches for p in b.provenance],
        nearest_class=[c for b in batches for c in b.nearest_class],
    )


__all__ = ["TrainDetector", "TrainingResult", "split_validation", "fake_ood_rows"]

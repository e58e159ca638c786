"""Versioned ``.npz`` dumps of model parameters and GROD statistics."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict

import numpy as np

from domain.entities.grod import GrodState
from domain.entities.model import BlockParameters, Budget, ClassifierHead, TransformerModel
from domain.errors import CheckpointError, IoError

FORMAT_VERSION = 1
_VERSION_KEY = "__format_version__"
_META_KEY = "__meta__"


def _save_npz(path: Path, arrays: Dict[str, np.ndarray], meta: Dict[str, object]) -> None:
    path = Path(path)
    payload = dict(arrays)
    payload[_VERSION_KEY] = np.asarray(FORMAT_VERSION, dtype=np.int64)
    payload[_META_KEY] = np.asarray(json.dumps(meta, sort_keys=True))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as handle:
            np.savez(handle, **payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _load_npz(path: Path) -> tuple[Dict[str, np.ndarray], Dict[str, object]]:
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise CheckpointError(f"{path} is not a valid archive: {exc}") from exc
    if _VERSION_KEY not in arrays or _META_KEY not in arrays:
        raise CheckpointError(f"{path} lacks format version or metadata")
    version = int(arrays.pop(_VERSION_KEY))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {version} in {path}")
    meta = json.loads(str(arrays.pop(_META_KEY)))
    return arrays, meta


class NpzCheckpointStore:
    def save(self, path: Path, model: TransformerModel) -> None:
        _save_npz(path, model.parameters(), model.metadata())

    def load(self, path: Path) -> TransformerModel:
        arrays, meta = _load_npz(path)
        try:
            budget = Budget(*[int(v) for v in meta["budget"]])  # type: ignore[union-attr]
            depth = int(meta["depth"])  # type: ignore[arg-type]
            blocks = [
                BlockParameters(**{name: arrays[f"blocks.{i}.{name}"] for name in BlockParameters.NAMES})
                for i in range(depth)
            ]
            head = ClassifierHead(**{name: arrays[f"head.{name}"] for name in ClassifierHead.NAMES})
            model = TransformerModel(
                d_hat0=int(meta["d_hat0"]),  # type: ignore[arg-type]
                tau=int(meta["tau"]),  # type: ignore[arg-type]
                budget=budget,
                num_classes=int(meta["num_classes"]),  # type: ignore[arg-type]
                input_weight=arrays["input.weight"],
                input_bias=arrays["input.bias"],
                blocks=blocks,
                head=head,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"checkpoint {path} is missing a tensor or metadata field: {exc}") from exc
        extra = set(arrays) - set(model.parameters())
        if extra:
            raise CheckpointError(f"checkpoint {path} has unexpected tensors: {sorted(extra)}")
        return model


class NpzGrodStateStore:
    """Snapshot of the tracked statistics, lambda, batch index and any pooled warmup batches."""

    def save(self, path: Path, state: GrodState) -> None:
        classes = state.known_classes()
        arrays: Dict[str, np.ndarray] = {
            "batch_index": np.asarray(state.batch_index, dtype=np.int64),
            "lambda_filter": np.asarray(state.lambda_filter, dtype=np.float64),
            "dist_id_pca": np.asarray(state.dist_id_pca, dtype=np.float64),
            "classes": np.asarray(classes, dtype=np.int64),
        }
        if state.initialized:
            arrays["mu_pca"] = state.mu_pca  # type: ignore[assignment]
            arrays["cov_pca"] = state.cov_pca  # type: ignore[assignment]
        for i in classes:
            arrays[f"mu_lda.{i}"] = state.mu_lda[i]
            arrays[f"cov_lda.{i}"] = state.cov_lda[i]
            if i in state.dist_id_lda:
                arrays[f"dist_id_lda.{i}"] = np.asarray(state.dist_id_lda[i], dtype=np.float64)
        for k, (features, labels) in enumerate(zip(state.warmup_features, state.warmup_labels)):
            arrays[f"warmup_features.{k}"] = np.asarray(features, dtype=np.float64)
            arrays[f"warmup_labels.{k}"] = np.asarray(labels, dtype=np.int64)
        _save_npz(path, arrays, {"initialized": state.initialized, "warmup_batches": len(state.warmup_features)})

    def load(self, path: Path) -> GrodState:
        arrays, meta = _load_npz(path)
        try:
            state = GrodState(
                batch_index=int(arrays["batch_index"]),
                lambda_filter=float(arrays["lambda_filter"]),
                dist_id_pca=float(arrays["dist_id_pca"]),
            )
            if meta.get("initialized"):
                state.mu_pca, state.cov_pca = arrays["mu_pca"], arrays["cov_pca"]
            for i in (int(c) for c in arrays["classes"]):
                state.mu_lda[i] = arrays[f"mu_lda.{i}"]
                state.cov_lda[i] = arrays[f"cov_lda.{i}"]
                if f"dist_id_lda.{i}" in arrays:
                    state.dist_id_lda[i] = float(arrays[f"dist_id_lda.{i}"])
            for k in range(int(meta.get("warmup_batches", 0))):  # type: ignore[call-overload]
                state.warmup_features.append(arrays[f"warmup_features.{k}"])
                state.warmup_labels.append(arrays[f"warmup_labels.{k}"])
        except KeyError as exc:
            raise CheckpointError(f"state snapshot {path} is missing {exc}") from exc
        return state


__all__ = ["FORMAT_VERSION", "NpzCheckpointStore", "NpzGrodStateStore"]

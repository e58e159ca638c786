from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from application.services.synthdata import MixtureData, gen_appendix_c, gen_ingest_sets
from config.experiment import ExperimentConfig

from ..entities.value_objects import TaskType
from ..ports.repositories import FeatureStore

logger = logging.getLogger("grodlab.data")

TRAIN_FILE = "train.csv"
TEST_FILE = "test.csv"


@dataclass
class GeneratedData:
    train_path: Path
    test_path: Path
    num_classes: int
    train_rows: int
    test_rows: int


class GenerateData:
    """Write ``train.csv`` (ID only) and ``test.csv`` (ID test rows followed by OOD rows)."""

    def __init__(self, feature_store: FeatureStore) -> None:
        self.feature_store = feature_store

    def execute(self, config: ExperimentConfig, seed: int, data_dir: Path) -> GeneratedData:
        mixture = self._generate(config, seed)
        train, test = mixture.train_batch(), mixture.test_batch()
        data_dir = Path(data_dir)
        train_path, test_path = data_dir / TRAIN_FILE, data_dir / TEST_FILE
        self.feature_store.write(train_path, train)
        self.feature_store.write(test_path, test)
        logger.info(
            "Feature files written",
            extra={
                "task": config.task.value,
                "seed": seed,
                "train_rows": train.rows,
                "test_rows": test.rows,
                "data_dir": str(data_dir),
            },
        )
        return GeneratedData(train_path, test_path, mixture.num_classes, train.rows, test.rows)

    @staticmethod
    def _generate(config: ExperimentConfig, seed: int) -> MixtureData:
        if config.task is TaskType.INGEST:
            return gen_ingest_sets(
                config.ingest_classes,
                config.ingest_dim,
                config.ingest_train_per_class,
                config.ingest_test_per_class,
                config.ingest_separation,
                seed,
                noise_floor=config.ingest_noise_floor,
            )
        return gen_appendix_c(seed, config.train_per_component, config.test_per_component)


__all__ = ["GenerateData", "GeneratedData", "TRAIN_FILE", "TEST_FILE"]

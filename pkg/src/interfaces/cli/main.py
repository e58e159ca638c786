from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence

from application.controllers.experiment_controller import ExperimentController
from application.logging_config import configure_logging
from config.experiment import ExperimentConfig, load_experiment_config
from domain.errors import GrodLabError, UsageError
from infrastructure.container import get_container

logger = logging.getLogger("grodlab.cli")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_GROD_ERROR = 2


class GrodArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors raise instead of printing usage and exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> GrodArgumentParser:
    parser = GrodArgumentParser(prog="grodlab", description="Transformer OOD detection with GROD fake outliers")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Flat key: value YAML experiment file")
    common.add_argument("--seed", type=int, default=None, help="Run seed (overrides the config)")
    common.add_argument("--out", type=Path, default=None, help="Output directory (overrides the config)")
    common.add_argument("--data", type=Path, default=None, help="Feature file directory (overrides the config)")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("gen-data", parents=[common], help="Write synthetic feature files")
    commands.add_parser("train", parents=[common], help="Train a detector and save its checkpoint")
    evaluate = commands.add_parser("eval", parents=[common], help="Score eval files and write the report")
    evaluate.add_argument("--checkpoint", type=Path, default=None, help="Checkpoint to load (default <out>/checkpoint.npz)")
    commands.add_parser("sweep-capacity", parents=[common], help="Cross-entropy-only capacity sweep")
    commands.add_parser("ingest", parents=[common], help="Head-only GROD on feature files plus an MSP baseline")
    commands.add_parser("ablate", parents=[common], help="Grid over a and gamma")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    return load_experiment_config(
        args.config,
        seed=args.seed,
        out_dir=str(args.out) if args.out else None,
        data_dir=str(args.data) if args.data else None,
    )


def _as_jsonable(result: Any) -> Any:
    if hasattr(result, "as_dict"):
        return result.as_dict()
    if isinstance(result, Path):
        return str(result)
    if hasattr(result, "__dataclass_fields__"):
        return {name: _as_jsonable(getattr(result, name)) for name in result.__dataclass_fields__}
    return result


def _dispatch(controller: ExperimentController, args: argparse.Namespace, config: ExperimentConfig) -> Any:
    handlers: Dict[str, Callable[[], Any]] = {
        "gen-data": lambda: controller.gen_data(config),
        "train": lambda: controller.train(config),
        "eval": lambda: controller.eval(config, getattr(args, "checkpoint", None)),
        "sweep-capacity": lambda: controller.sweep_capacity(config),
        "ingest": lambda: controller.ingest(config),
        "ablate": lambda: controller.ablate(config),
    }
    return handlers[args.command]()


def error_line(exc: BaseException) -> str:
    message = " ".join(str(exc).split())
    return f"error={type(exc).__name__} message={message}"


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(error_line(exc), file=sys.stderr)
        return EXIT_GROD_ERROR
    container = None
    try:
        config = load_config(args)
        container = get_container()
        result = _dispatch(container.experiment_controller, args, config)
    except GrodLabError as exc:
        return _fail(container, args, exc, EXIT_GROD_ERROR)
    except Exception as exc:  # noqa: BLE001
        return _fail(container, args, exc, EXIT_UNEXPECTED)
    print(json.dumps({"command": args.command, "result": _as_jsonable(result)}, sort_keys=True, default=str))
    return EXIT_OK


def _fail(container: Any, args: argparse.Namespace, exc: BaseException, code: int) -> int:
    logger.error("Command failed", extra={"command": args.command, "error": type(exc).__name__})
    if container is not None:
        container.telemetry.notify_alert(
            "cli.failed", {"command": args.command, "error": type(exc).__name__, "message": str(exc)}
        )
    # the error line is the last thing on stderr, after any JSON log records
    print(error_line(exc), file=sys.stderr)
    return code


def run() -> None:
    raise SystemExit(main())


__all__: List[str] = ["GrodArgumentParser", "build_parser", "error_line", "load_config", "main", "run"]


if __name__ == "__main__":
    run()

import logging
import sys
from typing import Any, Sequence

from pydantic import ValidationError

from tfac.commands.api import build_parser
from tfac.exceptions import InvalidParameterError, TfacError, error_line
from tfac.schemas.experiments import ExperimentConfig
from tfac.settings import settings
from tfac.utils.config_file import load_config_file, merge_config


logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def describe_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "config"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def build_config(command: str, values: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig(command=command, **values)
    except ValidationError as e:
        raise InvalidParameterError(describe_validation_error(e)) from e


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "handler", "config_path")
    }

    try:
        file_values = load_config_file(args.config_path) if args.config_path else {}
        values = merge_config(file_values, flags)
        log_level = str(values.pop("log_level", settings.LOG_LEVEL)).upper()
        logging.basicConfig(level=log_level, format=LOG_FORMAT)

        config = build_config(args.command, values)
        logger.info("Running %s with output in %s", config.command.value, config.out)
        exit_code: int = args.handler(config)
        return exit_code
    except TfacError as e:
        print(error_line(e), file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(error_line(InvalidParameterError(describe_validation_error(e))), file=sys.stderr)
        return InvalidParameterError.exit_code
    except Exception as e:
        logger.exception("Unexpected failure")
        print(error_line(e), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

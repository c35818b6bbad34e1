from __future__ import annotations

import logging
from typing import Any

_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


def _render(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    text = str(value)
    return f'"{text}"' if " " in text else text


def log(logger: logging.Logger, level: int, event: str, **fields: Any) -> None:
    """Emit `event key=value ...` at `level`; fields are rendered lazily."""
    if not logger.isEnabledFor(level):
        return
    if fields:
        body = " ".join(f"{k}={_render(v)}" for k, v in fields.items())
        logger.log(level, "%s %s", event, body)
    else:
        logger.log(level, "%s", event)


def configure_logging(level: int | str = logging.INFO) -> None:
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
    logging.basicConfig(level=level, format=_FORMAT)
    logging.getLogger("ranklab").setLevel(level)

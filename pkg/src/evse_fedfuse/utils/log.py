"""rich 기반 로깅 설정."""

from __future__ import annotations

import logging

from rich.console import Console
from rich.logging import RichHandler

err_console = Console(stderr=True)

_FORMAT = "%(message)s"


def setup_logging(verbosity: int = 0) -> None:
    """패키지 로거에 RichHandler를 붙인다.

    verbosity: -1 = WARNING, 0 = INFO, 1 이상 = DEBUG
    """
    if verbosity < 0:
        level = logging.WARNING
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG

    logger = logging.getLogger("evse_fedfuse")
    logger.setLevel(level)
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(
        console=err_console, show_path=False, rich_tracebacks=True, markup=False
    )
    handler.setFormatter(logging.Formatter(_FORMAT))
    logger.addHandler(handler)
    logger.propagate = False

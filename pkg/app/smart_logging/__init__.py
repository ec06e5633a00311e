from __future__ import annotations

import logging
import logging.config
from pathlib import Path

from app.core.settings import load_settings
from app.smart_logging.stage_logging import install_stage_logger

_FORMAT = "%(asctime)s %(levelname)s [%(name)s] [%(stage)s] %(message)s"
_configured = False


def setup_logging(level: str | None = None) -> None:
    global _configured
    if _configured:
        return

    install_stage_logger()
    settings = load_settings()
    handlers: dict[str, dict] = {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "default",
            "stream": "ext://sys.stderr",
        }
    }
    if settings.log_dir:
        Path(settings.log_dir).mkdir(parents=True, exist_ok=True)
        handlers["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "formatter": "default",
            "filename": str(Path(settings.log_dir) / "casimir-twin.log"),
            "maxBytes": 5 * 1024 * 1024,
            "backupCount": 3,
            "encoding": "utf-8",
        }

    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {"default": {"format": _FORMAT}},
            "handlers": handlers,
            "root": {
                "level": level or settings.log_level,
                "handlers": list(handlers),
            },
            # matplotlib is chatty at INFO about font caches
            "loggers": {"matplotlib": {"level": "WARNING"}},
        }
    )
    _configured = True

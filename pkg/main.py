from __future__ import annotations

import logging
import os
import platform
import sys

import sentry_sdk
from app.cli.commands import run_cli
from app.smart_logging import setup_logging

setup_logging()

logger = logging.getLogger("casimir-twin.bootstrap")


def _init_sentry() -> None:
    sentry_dsn = os.getenv("SENTRY_DSN")
    if not sentry_dsn:
        logger.info("Sentry disabled (SENTRY_DSN is not set)")
        return

    sentry_sdk.init(
        dsn=sentry_dsn,
        send_default_pii=False,
        environment=os.getenv("ENV", "development"),
    )
    logger.info("Sentry enabled for ENV=%s", os.getenv("ENV", "development"))


def main() -> int:
    logger.debug("=== CASIMIR TWIN BOOTSTRAP START ===")
    logger.debug("PID=%s", os.getpid())
    logger.debug("Python=%s", sys.version)
    logger.debug("Platform=%s", platform.platform())
    logger.debug("CWD=%s", os.getcwd())

    for key in (
        "ENV",
        "LOG_DIR",
        "LOG_LEVEL",
        "CASIMIR_TWIN_OUT_DIR",
    ):
        logger.debug("ENV %s=%s", key, os.getenv(key))

    _init_sentry()

    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())

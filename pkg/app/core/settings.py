from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Settings:
    env: str
    log_dir: str | None
    log_level: str
    sentry_dsn: str | None
    out_dir: Path


def load_settings() -> Settings:
    return Settings(
        env=os.getenv("ENV", "development"),
        log_dir=os.getenv("LOG_DIR") or None,
        log_level=os.getenv("LOG_LEVEL", "INFO").upper(),
        sentry_dsn=os.getenv("SENTRY_DSN") or None,
        out_dir=Path(os.getenv("CASIMIR_TWIN_OUT_DIR", "out")),
    )

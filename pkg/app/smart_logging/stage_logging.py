from __future__ import annotations

import logging
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator

_current_stage: ContextVar[str] = ContextVar("casimir_twin_stage", default="-")
_installed = False


def install_stage_logger() -> None:
    """Stamp every log record with the pipeline stage running in this context."""
    global _installed
    if _installed:
        return

    previous_factory = logging.getLogRecordFactory()

    def _factory(*args, **kwargs) -> logging.LogRecord:
        record = previous_factory(*args, **kwargs)
        if not hasattr(record, "stage"):
            record.stage = _current_stage.get()
        return record

    logging.setLogRecordFactory(_factory)
    _installed = True


def current_stage() -> str:
    return _current_stage.get()


@contextmanager
def stage_context(name: str) -> Iterator[None]:
    token = _current_stage.set(name)
    try:
        yield
    finally:
        _current_stage.reset(token)

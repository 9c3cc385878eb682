import logging

from rich.logging import RichHandler

from core.config import settings

_configured = False


def setup_logging(level: str | None = None) -> None:
    """Install a single rich handler on the root logger (idempotent)."""
    global _configured

    level = level or settings.LOG_LEVEL
    if _configured:
        logging.getLogger().setLevel(level)
        return

    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
    )
    _configured = True

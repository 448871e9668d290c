import logging

LOG_FORMAT = '%(asctime)s %(name)s %(levelname)s: %(message)s'

logging.basicConfig(
    level=logging.INFO,
    format=LOG_FORMAT,
)


def set_level(level: str) -> None:
    """Меняет уровень корневого логгера (значение --log-level)."""
    logging.getLogger().setLevel(level)

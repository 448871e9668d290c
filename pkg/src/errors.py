from __future__ import annotations


class T5Error(Exception):
    """Базовое исключение пакета."""


class InvalidArgumentError(T5Error, ValueError):
    """Аргументы операции нарушают её предусловия."""


class ResourceLimitError(T5Error):
    """Запрошенный перебор превышает настроенный лимит размера."""


class CacheChecksumError(T5Error):
    """Запись кэша переписи повреждена: контрольная сумма не сошлась."""


class InvariantViolationError(T5Error):
    """Сработала жёсткая проверка инварианта во время вычислений."""

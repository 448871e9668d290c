from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Optional

from sqlalchemy import (
    Column,
    Integer,
    MetaData,
    String,
    Table,
    Text,
    create_engine,
    delete,
    insert,
    select,
)
from sqlalchemy.engine import Engine

from . import ARTIFACT_VERSION
from .census import CensusReport, counts_checksum
from .errors import CacheChecksumError, InvariantViolationError

CACHE_DIR_ENV = 'T5_CACHE_DIR'
CACHE_FILE = 'census.sqlite3'


def default_cache_dir() -> Path:
    """Каталог кэша: $T5_CACHE_DIR или ~/.cache/t5census."""
    override = os.environ.get(CACHE_DIR_ENV)
    if override:
        return Path(override)
    return Path.home() / '.cache' / 't5census'


def default_cache_url(cache_dir: Optional[Path] = None) -> str:
    directory = Path(cache_dir) if cache_dir else default_cache_dir()
    directory.mkdir(parents=True, exist_ok=True)
    return f'sqlite:///{directory / CACHE_FILE}'


class CensusCache:
    """Версионированный кэш отчётов переписи в SQL-хранилище.

    Одна запись на пару (n, version): JSON с отсортированными ключами,
    содержащий счётчики, версию и SHA-256 от счётчиков. При чтении
    контрольная сумма пересчитывается; расхождение — CacheChecksumError.

    Args:
        url: SQLAlchemy DSN; по умолчанию SQLite в каталоге кэша.
        logger: Логгер; по умолчанию по имени класса.
    """

    def __init__(
        self,
        url: Optional[str] = None,
        *,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        self.url = url or default_cache_url()
        self.logger = logger or logging.getLogger(self.__class__.__name__)
        self.engine: Engine = create_engine(self.url, future=True)
        self.metadata = MetaData()
        self.table = Table(
            'census_reports',
            self.metadata,
            Column('n', Integer, primary_key=True),
            Column('version', String(32), primary_key=True),
            Column('payload', Text, nullable=False),
        )
        self.metadata.create_all(self.engine)

    def dispose(self) -> None:
        self.engine.dispose()

    @staticmethod
    def _payload(report: CensusReport) -> str:
        record = report.to_record(include_provenance=True)
        record['checksum'] = counts_checksum(report.counts())
        return json.dumps(record, sort_keys=True)

    def store(self, report: CensusReport) -> None:
        """Записывает (или перезаписывает) отчёт для (n, version)."""
        payload = self._payload(report)
        with self.engine.begin() as conn:
            conn.execute(
                delete(self.table).where(
                    self.table.c.n == report.n,
                    self.table.c.version == report.version,
                )
            )
            conn.execute(
                insert(self.table).values(
                    n=report.n,
                    version=report.version,
                    payload=payload,
                )
            )
        self.logger.info(
            'Cached census report: n=%d, version=%s',
            report.n,
            report.version,
        )

    def load(
        self,
        n: int,
        version: str = ARTIFACT_VERSION,
    ) -> CensusReport | None:
        """Читает отчёт; None при промахе (в т.ч. другой версии).

        Raises:
            CacheChecksumError: Запись повреждена.
        """
        with self.engine.connect() as conn:
            payload = conn.execute(
                select(self.table.c.payload).where(
                    self.table.c.n == n,
                    self.table.c.version == version,
                )
            ).scalar_one_or_none()
        if payload is None:
            self.logger.debug('Cache miss: n=%d, version=%s', n, version)
            return None
        try:
            record = json.loads(payload)
            checksum = record.pop('checksum')
            report = CensusReport.from_record(record)
        except (ValueError, KeyError, TypeError) as exc:
            raise CacheChecksumError(
                f'unreadable cache record for n={n}, version={version}'
            ) from exc
        if checksum != counts_checksum(report.counts()) or any(
            record.get(k) != v for k, v in report.counts().items()
        ):
            raise CacheChecksumError(
                f'checksum mismatch for cached census n={n}, version={version}'
            )
        return report

    def reconcile(self, report: CensusReport) -> bool:
        """Сверяет свежий отчёт с кэшем; пишет его при промахе.

        Returns:
            bool: False, если кэш расходится со свежими счётчиками.
        """
        cached = self.load(report.n, report.version)
        if cached is None:
            self.store(report)
            return True
        if cached.counts() != report.counts():
            self.logger.warning(
                'Census divergence at n=%d: cached=%s fresh=%s',
                report.n,
                cached.counts(),
                report.counts(),
            )
            return False
        return True


def census_cache_roundtrip(report: CensusReport, cache: CensusCache) -> dict:
    """Сохраняет отчёт, перечитывает и возвращает сохранённую запись.

    Raises:
        InvariantViolationError: Перечитанные счётчики отличаются.
    """
    cache.store(report)
    loaded = cache.load(report.n, report.version)
    if loaded is None or loaded.counts() != report.counts():
        raise InvariantViolationError(
            f'cache roundtrip changed census n={report.n}'
        )
    return loaded.to_record()

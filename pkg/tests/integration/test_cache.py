from __future__ import annotations

import json
import logging

import pytest
from sqlalchemy import update

from src import ARTIFACT_VERSION
from src.cache import CensusCache, census_cache_roundtrip, default_cache_url
from src.census import CensusReport, full_census
from src.errors import CacheChecksumError

pytestmark = [pytest.mark.integration]


def _set_payload(cache: CensusCache, n: int, payload: str) -> None:
    """Подменяет сохранённую запись для n."""
    with cache.engine.begin() as conn:
        conn.execute(
            update(cache.table)
            .where(cache.table.c.n == n)
            .values(payload=payload)
        )


def test_roundtrip_keeps_counts(cache):
    """Проверяет, что сохранение и чтение не меняют счётчики."""
    report = full_census(4)
    record = census_cache_roundtrip(report, cache)
    assert record['s_n'] == 15
    assert record['version'] == ARTIFACT_VERSION
    assert cache.load(4).counts() == report.counts()


def test_load_misses_other_version_and_n(cache):
    """Проверяет промах кэша для другого n и другой версии."""
    cache.store(full_census(4))
    assert cache.load(5) is None
    assert cache.load(4, version='0.0.1') is None


def test_store_overwrites_same_key(cache):
    """Проверяет перезапись записи с тем же (n, version)."""
    cache.store(CensusReport(4, 16, 16, 15, 16, 4))
    cache.store(CensusReport(4, 16, 16, 14, 16, 4))
    assert cache.load(4).s_n == 14


def test_tampered_payload_fails_checksum(cache):
    """Проверяет ошибку контрольной суммы на изменённой записи."""
    cache.store(full_census(4))
    with cache.engine.connect() as conn:
        payload = conn.execute(cache.table.select()).first().payload
    record = json.loads(payload)
    record['s_n'] = 14
    _set_payload(cache, 4, json.dumps(record, sort_keys=True))
    with pytest.raises(CacheChecksumError):
        cache.load(4)


def test_unreadable_payload_fails_checksum(cache):
    """Проверяет ошибку на нечитаемой записи."""
    cache.store(full_census(4))
    _set_payload(cache, 4, '{not json')
    with pytest.raises(CacheChecksumError):
        cache.load(4)


@pytest.mark.logging
def test_reconcile_warns_on_divergence(cache, caplog):
    """Проверяет warning и False при расхождении с кэшем."""
    fresh = full_census(4)
    assert cache.reconcile(fresh)
    assert cache.reconcile(fresh)
    cache.store(CensusReport(4, 16, 16, 14, 16, 4))
    caplog.set_level(logging.WARNING, logger='CensusCache')
    assert not cache.reconcile(fresh)
    assert any('Census divergence' in r.getMessage() for r in caplog.records)


def test_default_url_follows_environment(isolated_cache_dir):
    """Проверяет, что каталог кэша берётся из T5_CACHE_DIR."""
    url = default_cache_url()
    assert url == f'sqlite:///{isolated_cache_dir / "census.sqlite3"}'
    assert isolated_cache_dir.is_dir()


def test_store_keeps_elapsed_and_workers(cache):
    """Проверяет, что время и число процессов переживают сохранение."""
    report = CensusReport(4, 16, 16, 15, 16, 4, elapsed=0.25, workers=4)
    cache.store(report)
    loaded = cache.load(4)
    assert loaded == report
    assert (loaded.elapsed, loaded.workers) == (0.25, 4)

from __future__ import annotations

from pathlib import Path

import pytest

from src.cache import CensusCache


@pytest.fixture()
def cache_url(tmp_path: Path) -> str:
    """DSN SQLite-кэша во временной директории."""
    return f'sqlite:///{tmp_path / "census.sqlite3"}'


@pytest.fixture()
def cache(cache_url):
    """Кэш переписи во временной SQLite-базе."""
    c = CensusCache(cache_url)
    yield c
    c.dispose()


@pytest.fixture(autouse=True)
def isolated_cache_dir(tmp_path: Path, monkeypatch) -> Path:
    """Каталог кэша CLI по умолчанию уводится во временную директорию."""
    directory = tmp_path / 'cache'
    monkeypatch.setenv('T5_CACHE_DIR', str(directory))
    return directory

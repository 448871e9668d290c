from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from src.hypergraph import OrderedPartition, TripleSystem
from tests._helpers.systems import _consistent, _k4, _t5


@pytest.fixture()
def t5() -> TripleSystem:
    """T5 на пяти вершинах."""
    return _t5()


@pytest.fixture()
def k4() -> TripleSystem:
    """Полная система на четырёх вершинах."""
    return _k4()


@pytest.fixture()
def b3_12() -> tuple[TripleSystem, OrderedPartition]:
    """Все согласованные тройки при n=12, X = {0..7}."""
    return _consistent(12, list(range(8)))


@pytest.fixture()
def rng() -> np.random.Generator:
    """Генератор с фиксированным зерном."""
    return np.random.default_rng(1729)


@pytest.fixture()
def make_random_system(rng) -> Callable[..., TripleSystem]:
    """Фабрика случайных систем с заданной плотностью."""

    def _make(n: int, density: float = 0.5) -> TripleSystem:
        total = n * (n - 1) * (n - 2) // 6
        mask = 0
        for idx in np.flatnonzero(rng.random(total) < density):
            mask |= 1 << int(idx)
        return TripleSystem(n, mask)

    return _make

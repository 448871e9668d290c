from __future__ import annotations

import pytest

from src.acceptance import brute_force_d_h
from src.census import full_census
from src.detection import optimal_partitions
from src.hypergraph import TripleSystem

pytestmark = [pytest.mark.integration]


@pytest.mark.parametrize('n', [4, 5])
def test_worker_counts_agree(n):
    """Проверяет, что счётчики не зависят от числа процессов."""
    single = full_census(n, workers=1)
    for workers in (2, 4):
        assert full_census(n, workers=workers).counts() == single.counts()


def test_small_blocks_agree_with_one_block():
    """Проверяет, что мелкие блоки масок дают те же счётчики."""
    assert full_census(5, checkpoint_every=100).counts() == full_census(5).counts()


@pytest.mark.slow
def test_census_at_six():
    """Проверяет перепись при n=6 в двух процессах."""
    report = full_census(6, workers=2)
    assert report.total == 1 << 20
    assert report.s_n < report.i_n == report.t5_free


def test_d_h_oracle_over_all_four_vertex_systems():
    """Проверяет D_H против эталона на всех системах при n=4."""
    for mask in range(1 << 4):
        h = TripleSystem(4, mask)
        assert optimal_partitions(h).d_h == brute_force_d_h(h)

from __future__ import annotations

from math import ceil, comb, floor

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.constructions import (
    B3Value,
    b3,
    build_b3,
    ns_family_base,
    ns_sample,
    random_semibipartite,
    random_triple_system,
)
from src.detection import contains_t5, has_independent_neighborhoods, is_semibipartite
from src.errors import InvalidArgumentError
from src.hypergraph import OrderedPartition, classify_edges, triples_by_x_count

pytestmark = [pytest.mark.unit]


@pytest.mark.parametrize(
    ('n', 'expected'),
    [(3, B3Value(1, 2)), (5, B3Value(6, 3)), (6, B3Value(12, 4)), (9, B3Value(45, 6))],
)
def test_b3_values(n, expected):
    """Проверяет значения b3(n) и argmax a для малых n."""
    assert b3(n) == expected


def test_b3_argmax_is_near_two_thirds():
    """Проверяет, что argmax a равен floor или ceil от 2n/3."""
    for n in range(3, 200):
        assert b3(n).a in (floor(2 * n / 3), ceil(2 * n / 3))


def test_b3_rejects_small_n():
    """Проверяет отказ b3 при n < 3."""
    with pytest.raises(InvalidArgumentError):
        b3(2)


@pytest.mark.parametrize('n', [4, 6, 9, 12])
def test_build_b3_is_t5_free_and_semibipartite(n):
    """Проверяет, что B3(n) без T5 и согласована со своим разбиением."""
    h, p = build_b3(n)
    assert h.edge_count == b3(n).value
    assert p.x == frozenset(range(b3(n).a))
    assert classify_edges(h, p).d_p == 0
    assert not contains_t5(h)


def test_build_b3_small_edge_count():
    """Проверяет число рёбер B3(4)."""
    assert build_b3(4)[0].edge_count == 3


def test_ns_family_base_at_nine():
    """Проверяет параметры несемидвудольного семейства при n=9."""
    base = ns_family_base(9)
    assert base.t == 6
    assert base.special == (0, 1, 7, 8)
    assert base.s == 45
    assert base.excluded == 19
    assert len(base.g_edges) == 26
    assert base.stated_lower_bound == 24
    assert base.log2_size == 26
    assert base.chain_holds()
    assert base.f_edges.bit_count() == 4
    assert not base.f_edges & base.g_mask


def test_ns_family_base_at_twelve():
    """Проверяет t, s и размер пула при n=12."""
    base = ns_family_base(12)
    assert (base.t, base.s, len(base.g_edges)) == (8, 112, 84)


def test_ns_family_rejects_small_n():
    """Проверяет отказ семейства при n < 9."""
    with pytest.raises(InvalidArgumentError):
        ns_family_base(8)


def test_ns_sample_with_empty_subset_is_k4():
    """Проверяет, что выборка с пустым подмножеством — это K4 на особых вершинах."""
    base = ns_family_base(9)
    h = ns_sample(base, subset=0, verify=True)
    assert h.edge_count == 4
    assert not contains_t5(h)
    assert is_semibipartite(h) is None


def test_ns_sample_with_full_pool():
    """Проверяет число рёбер при выборе всего пула."""
    base = ns_family_base(9)
    h = ns_sample(base, subset=(1 << len(base.g_edges)) - 1, verify=True)
    assert h.edge_count == 30


@pytest.mark.parametrize('seed', [0, 1, 2, 3])
def test_ns_sample_random_is_verified(seed):
    """Проверяет воспроизводимость случайной выборки и наличие F."""
    base = ns_family_base(10)
    h = ns_sample(base, seed=seed)
    assert base.f_edges & h.edges == base.f_edges
    assert ns_sample(base, seed=seed) == h


def test_ns_sample_rejects_wide_subset():
    """Проверяет отказ на подмножестве шире пула."""
    base = ns_family_base(9)
    with pytest.raises(InvalidArgumentError):
        ns_sample(base, subset=1 << len(base.g_edges))


def test_random_semibipartite_extremes():
    """Проверяет крайние вероятности и отказ на неверных a и p."""
    n, a = 8, 5
    pool = triples_by_x_count(n, (1 << a) - 1)[2]
    assert random_semibipartite(n, a, 1.0, seed=1).edges == pool
    assert random_semibipartite(n, a, 0.0, seed=1).edges == 0
    sample = random_semibipartite(n, a, 0.5, seed=1)
    assert sample.edges & ~pool == 0
    with pytest.raises(InvalidArgumentError):
        random_semibipartite(n, 1, 0.5)
    with pytest.raises(InvalidArgumentError):
        random_semibipartite(n, a, 1.5)


def test_random_triple_system_is_reproducible():
    """Проверяет воспроизводимость случайной системы по зерну."""
    first = random_triple_system(9, 0.3, seed=11)
    assert random_triple_system(9, 0.3, seed=11) == first
    assert 0 < first.edge_count < comb(9, 3)
    assert random_triple_system(9, 1.0, seed=0).edge_count == comb(9, 3)


@settings(max_examples=60, deadline=None)
@given(
    data=st.data(),
    n=st.integers(min_value=6, max_value=16),
    p=st.floats(min_value=0.0, max_value=1.0),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_random_semibipartite_has_independent_neighborhoods(data, n, p, seed):
    """Проверяет, что случайная семидвудольная система не содержит T5."""
    a = data.draw(st.integers(min_value=2, max_value=n - 1))
    h = random_semibipartite(n, a, p, seed=seed)
    assert has_independent_neighborhoods(h)
    assert classify_edges(h, OrderedPartition.from_x(n, range(a))).d_p == 0


@pytest.mark.parametrize('n', [0, 2])
def test_random_triple_system_rejects_small_n(n):
    """Проверяет отказ случайной системы при n < 3."""
    with pytest.raises(InvalidArgumentError):
        random_triple_system(n, 0.5, seed=1)

from __future__ import annotations

import math
from fractions import Fraction
from math import comb

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.bounds import (
    DensityStatus,
    TripartiteCylinder,
    binary_entropy,
    chernoff_bound,
    chernoff_empirical,
    cylinder_from_pair_graph,
    entropy_facts_check,
    greedy_matching,
    lower_density_check,
    matchcount_bound,
    max_matching_count,
    random_cylinder,
    s_bound_check,
    tail_fact_threshold,
    threshold_hierarchy_check,
    triangle_count_tripartite,
    triangle_counting_trial,
)
from src.constructions import DEFAULT_THRESHOLDS, Thresholds
from src.errors import InvalidArgumentError, ResourceLimitError
from src.hypergraph import (
    OrderedPartition,
    PairGraph,
    TripleSystem,
    all_pairs,
    relabel,
    relabel_partition,
)
from tests._helpers.systems import _consistent

pytestmark = [pytest.mark.unit]


def test_binary_entropy_values():
    """Проверяет значения двоичной энтропии и отказ в нуле."""
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert binary_entropy(0.25) == pytest.approx(binary_entropy(0.75))
    with pytest.raises(InvalidArgumentError):
        binary_entropy(0.0)


def test_entropy_facts_hold_exactly_for_small_n():
    """Проверяет точную проверку энтропийных оценок при n=64."""
    facts = entropy_facts_check(64, 0.25)
    assert facts.exact
    assert facts.k == 16
    assert facts.single
    assert facts.tail


def test_entropy_facts_in_double_for_large_n():
    """Проверяет переход к вычислению в double при больших n."""
    facts = entropy_facts_check(400, 0.3)
    assert not facts.exact
    assert facts.single
    assert facts.k == 120


def test_entropy_facts_reject_bad_arguments():
    """Проверяет отказ на доле вне (0, 1/2) и на n = 0."""
    with pytest.raises(InvalidArgumentError):
        entropy_facts_check(10, 0.5)
    with pytest.raises(InvalidArgumentError):
        entropy_facts_check(0, 0.2)


def test_tail_threshold_is_on_the_grid():
    """Проверяет, что найденный порог хвоста лежит на сетке."""
    threshold = tail_fact_threshold(48)
    assert threshold is None or 0.05 <= threshold <= 0.45


def test_chernoff_bound_formula():
    """Проверяет формулу оценки Чернова и отказ на неверных аргументах."""
    assert chernoff_bound(100, 0.5, 10) == pytest.approx(math.exp(-1))
    with pytest.raises(InvalidArgumentError):
        chernoff_bound(0, 0.5, 1)
    with pytest.raises(InvalidArgumentError):
        chernoff_bound(10, 0.5, 0)


@pytest.mark.statistical
def test_chernoff_empirical_frequency_below_bound():
    """Проверяет, что частота отклонений не выше оценки и воспроизводима."""
    trial = chernoff_empirical(100, 0.5, 10, trials=20_000, seed=5)
    assert trial.holds
    assert trial.observed < 0.1
    again = chernoff_empirical(100, 0.5, 10, trials=20_000, seed=5)
    assert again.observed == trial.observed


def test_greedy_matching_takes_pairs_in_colex_order():
    """Проверяет жадный выбор пар в колекс-порядке."""
    g = PairGraph.from_pairs(4, [(0, 1), (1, 2), (2, 3)])
    assert greedy_matching(g).edge_list() == [(0, 1), (2, 3)]
    assert greedy_matching(PairGraph(6)).size == 0


def test_greedy_matching_meets_size_bound(rng):
    """Проверяет нижнюю оценку |M| >= |G| / (2n) на случайных графах."""
    for _ in range(50):
        n = int(rng.integers(2, 20))
        mask = 0
        for idx in np.flatnonzero(rng.random(comb(n, 2)) < rng.random()):
            mask |= 1 << int(idx)
        g = PairGraph(n, mask)
        assert greedy_matching(g).size * 2 * n >= g.size


@pytest.mark.parametrize(
    ('n_vertices', 'm', 'exact', 'bound'),
    [(3, 1, 4, 5), (4, 2, 16, 64)],
)
def test_max_matching_count_examples(n_vertices, m, exact, bound):
    """Проверяет точное число графов и оценку для малых N и m."""
    result = max_matching_count(n_vertices, m)
    assert (result.exact, result.bound) == (exact, bound)
    assert result.holds


def test_max_matching_count_matches_networkx():
    """Проверяет совпадение подсчёта при N=5, m=1 с networkx."""
    n = 5
    pairs = all_pairs(n)
    expected = 0
    for mask in range(1 << len(pairs)):
        if not mask & 1:
            continue
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(pairs[i] for i in range(len(pairs)) if mask >> i & 1)
        if len(nx.max_weight_matching(g, maxcardinality=True)) == 1:
            expected += 1
    result = max_matching_count(n, 1)
    assert result.exact == expected
    assert result.exact <= matchcount_bound(n, 1)


def test_max_matching_count_limits():
    """Проверяет пределы перебора и отказ при 2m > N."""
    with pytest.raises(ResourceLimitError):
        max_matching_count(9, 1)
    with pytest.raises(InvalidArgumentError):
        max_matching_count(4, 3)


def test_triangle_count_on_complete_and_empty_cylinders():
    """Проверяет число треугольников в полном и разрезанном цилиндре."""
    full = np.ones((4, 4), dtype=bool)
    empty = np.zeros((4, 4), dtype=bool)
    assert triangle_count_tripartite(TripartiteCylinder(full, full, full)) == 64
    assert triangle_count_tripartite(TripartiteCylinder(full, empty, full)) == 0


def test_cylinder_from_pair_graph():
    """Проверяет перевод графа пар в цилиндр и отказ на ребре внутри доли."""
    g = PairGraph.from_pairs(6, [(0, 2), (2, 4), (0, 4), (1, 3)])
    cylinder = cylinder_from_pair_graph(g, [[0, 1], [2, 3], [4, 5]])
    assert cylinder.m == 2
    assert triangle_count_tripartite(cylinder) == 1
    with pytest.raises(InvalidArgumentError):
        cylinder_from_pair_graph(
            PairGraph.from_pairs(6, [(0, 1)]), [[0, 1], [2, 3], [4, 5]],
        )
    with pytest.raises(InvalidArgumentError):
        cylinder_from_pair_graph(g, [[0, 1], [2, 3], [4]])


def test_random_cylinder_rejects_bad_density():
    """Проверяет отказ на плотности вне [0, 1]."""
    with pytest.raises(InvalidArgumentError):
        random_cylinder(5, 1.5)


@pytest.mark.statistical
def test_triangle_counts_concentrate():
    """Проверяет концентрацию числа треугольников около m^3/l^3."""
    trial = triangle_counting_trial(120, 2, 5, seed=3)
    assert trial.expected == Fraction(120 ** 3, 8)
    assert trial.within == 5


def test_lower_density_on_consistent_system(b3_12):
    """Проверяет статусы условий нижней плотности на согласованной системе."""
    h, p = b3_12
    report = lower_density_check(h, p, 0.1)
    assert report.statuses['v'] is DensityStatus.HOLDS_EXACT
    assert report.statuses['iii'] is DensityStatus.HOLDS_EXACT
    assert report.statuses['iv'] is DensityStatus.HOLDS_EXACT
    assert report.notes['iv'] == 'vacuous'
    assert report.statuses['i'] is DensityStatus.HOLDS_UNREFUTED
    assert report.statuses['ii'] is DensityStatus.HOLDS_UNREFUTED
    assert report.violated == ()
    assert lower_density_check(h, p, 0.05).statuses['v'] is DensityStatus.HOLDS_EXACT


def test_lower_density_on_empty_system_is_violated():
    """Проверяет нарушение условий на пустой системе и свидетеля."""
    h = TripleSystem(12)
    p = OrderedPartition.from_x(12, range(8))
    report = lower_density_check(h, p, 0.05)
    assert report.statuses['iii'] is DensityStatus.VIOLATED
    assert report.statuses['i'] is DensityStatus.VIOLATED
    assert 'iii' in report.witnesses
    assert report.as_dict()['statuses']['iii'] == 'VIOLATED'


def test_lower_density_downgrades_large_sides(b3_12):
    """Проверяет понижение точных условий до поиска при больших долях."""
    h, p = b3_12
    report = lower_density_check(h, p, 0.1, exact_limit=4)
    assert report.downgraded == ('iii', 'iv')
    assert 'downgraded' in report.notes['iii']


def test_lower_density_rejects_bad_arguments(b3_12):
    """Проверяет отказ на неизвестном режиме, mu вне (0, 1) и разных n."""
    h, p = b3_12
    with pytest.raises(InvalidArgumentError):
        lower_density_check(h, p, 0.1, effort='quick')
    with pytest.raises(InvalidArgumentError):
        lower_density_check(h, p, 1.0)
    with pytest.raises(InvalidArgumentError):
        lower_density_check(TripleSystem(5), p, 0.1)


def test_s_bound_small_cases():
    """Проверяет оценку S(n) на малых n и рекурсию."""
    report = s_bound_check(3, exact_s=2)
    assert report.bound == Fraction(2, 3)
    assert report.exact_holds
    assert report.recursion_holds is None
    assert s_bound_check(4, exact_s=15, exact_s_prev=2).recursion_holds
    for n in (3, 6, 9):
        assert s_bound_check(n).construction_holds
    with pytest.raises(InvalidArgumentError):
        s_bound_check(2)


def test_threshold_hierarchy():
    """Проверяет иерархию порогов по умолчанию и её нарушение."""
    assert threshold_hierarchy_check(DEFAULT_THRESHOLDS).holds
    loose = threshold_hierarchy_check(Thresholds(0.1, 0.1, 0.1, 0.1))
    assert not loose.holds
    assert not loose.checks['entropy_alpha']

@settings(max_examples=100, deadline=None)
@given(n=st.integers(min_value=2, max_value=12), pairs=st.integers(min_value=0))
def test_greedy_matching_is_maximal(n, pairs):
    """Проверяет, что каждое ребро вне паросочетания задевает его вершину."""
    g = PairGraph(n, pairs % (1 << comb(n, 2)))
    matching = greedy_matching(g)
    matched = {v for pair in matching.edge_list() for v in pair}
    assert len(matched) == 2 * matching.size
    assert all(a in matched or b in matched for a, b in g.edge_list())
    assert not matching.pairs & ~g.pairs


@settings(max_examples=60, deadline=None)
@given(
    m=st.integers(min_value=1, max_value=12),
    density=st.floats(min_value=0.0, max_value=1.0),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_triangle_count_matches_naive_loop(m, density, seed):
    """Проверяет подсчёт треугольников против тройного цикла по долям."""
    cylinder = random_cylinder(m, density, seed=seed)
    naive = sum(
        1
        for a in range(m) for b in range(m) for c in range(m)
        if cylinder.ab[a, b] and cylinder.bc[b, c] and cylinder.ca[c, a]
    )
    assert triangle_count_tripartite(cylinder) == naive


@settings(max_examples=15, deadline=None)
@given(
    keep=st.integers(min_value=0),
    x_perm=st.permutations(list(range(8))),
    y_perm=st.permutations(list(range(8, 12))),
)
def test_lower_density_is_invariant_under_side_relabeling(keep, x_perm, y_perm):
    """Проверяет, что точные условия не меняются при перестановке внутри долей."""
    full, p = _consistent(12, list(range(8)))
    h = TripleSystem(12, full.edges & (keep % (1 << comb(12, 3))))
    permutation = [*x_perm, *y_perm]
    moved = relabel(h, permutation)
    moved_p = relabel_partition(p, permutation)
    assert moved_p == p
    before = lower_density_check(h, p, 0.1)
    after = lower_density_check(moved, moved_p, 0.1)
    for condition in ('iii', 'iv', 'v'):
        assert after.statuses[condition] is before.statuses[condition]

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.constructions import DEFAULT_THRESHOLDS, Thresholds, build_b3
from src.detection import (
    bad_vertex_check,
    classify_conditions,
    contains_t5,
    has_independent_neighborhoods,
    in_forb_eta,
    is_semibipartite,
    iter_optimal_partitions,
    optimal_partitions,
    phi_choice_count,
    phi_degree_lower_bound,
    phi_image,
    rich_edges,
    semibipartite_core,
)
from src.errors import InvalidArgumentError, ResourceLimitError
from src.hypergraph import (
    OrderedPartition,
    TripleSystem,
    classify_edges,
    shadow_graph,
)
from tests._helpers.oracles import _brute_contains_t5, _brute_d_h

pytestmark = [pytest.mark.unit]


def _b3_plus_rich_edge() -> tuple[TripleSystem, OrderedPartition]:
    """B3(6) с добавленным несогласованным ребром {0, 4, 5}."""
    h, p = build_b3(6)
    return h.with_edges(TripleSystem.from_triples(6, [(0, 4, 5)]).edges), p


def test_contains_t5_reports_witness(t5):
    """Проверяет свидетеля T5: вершину-пару, базу и четыре ребра."""
    result = contains_t5(t5)
    assert result
    assert result.witness.apex == (0, 1)
    assert result.witness.base == (2, 3, 4)
    assert len(result.witness.edges) == 4
    assert result.witness.vertices == (0, 1, 2, 3, 4)


def test_t5_free_examples(k4):
    """Проверяет отсутствие T5 в K4, пустой системе и B3(9)."""
    assert not contains_t5(k4)
    assert contains_t5(k4).witness is None
    assert not contains_t5(TripleSystem(7))
    h, _ = build_b3(9)
    assert not contains_t5(h)
    assert has_independent_neighborhoods(h)


def test_complete_system_has_dependent_neighborhoods():
    """Проверяет, что полная система на 5 вершинах содержит T5."""
    h = TripleSystem.complete(5)
    assert not has_independent_neighborhoods(h)
    assert contains_t5(h)


@settings(max_examples=150, deadline=None)
@given(mask=st.integers(min_value=0, max_value=(1 << 20) - 1))
def test_independent_neighborhoods_iff_t5_free(mask):
    """Проверяет равносильность независимых соседств и отсутствия T5."""
    h = TripleSystem(6, mask)
    assert has_independent_neighborhoods(h) == (not _brute_contains_t5(h))
    assert bool(contains_t5(h)) == _brute_contains_t5(h)


def test_t5_is_not_semibipartite(t5):
    """Проверяет, что T5 не семидвудольна и D_H = 1 при X = {0, 1}."""
    assert is_semibipartite(t5) is None
    result = optimal_partitions(t5)
    assert result.d_h == 1
    assert 'n=5;X=0,1' in {p.to_text() for p in result.witnesses}
    assert not result.truncated


def test_k4_has_one_inconsistent_edge(k4):
    """Проверяет, что у K4 ровно одно несогласованное ребро."""
    assert is_semibipartite(k4) is None
    assert optimal_partitions(k4).d_h == 1


def test_b3_partition_is_the_unique_witness():
    """Проверяет, что разбиение B3(6) — единственное оптимальное."""
    h, p = build_b3(6)
    assert is_semibipartite(h) == p
    result = optimal_partitions(h)
    assert result.d_h == 0
    assert result.total == 1
    assert result.witnesses == (p,)


def test_empty_system_is_semibipartite():
    """Проверяет, что для пустой системы подходят все 2^n разбиений."""
    p = is_semibipartite(TripleSystem(5))
    assert p is not None
    assert optimal_partitions(TripleSystem(5), 4).total == 32


def test_witness_cap_truncates_but_total_stays_exact():
    """Проверяет, что предел свидетелей не меняет точное их число."""
    result = optimal_partitions(TripleSystem(5), 3)
    assert len(result.witnesses) == 3
    assert result.total == 32
    assert result.truncated


def test_partition_sweep_respects_cap():
    """Проверяет ошибку ресурса при n выше предела перебора разбиений."""
    h = TripleSystem(25)
    with pytest.raises(ResourceLimitError):
        is_semibipartite(h)
    with pytest.raises(ResourceLimitError):
        optimal_partitions(TripleSystem(8), cap=6)


@settings(max_examples=80, deadline=None)
@given(mask=st.integers(min_value=0, max_value=(1 << 20) - 1))
def test_d_h_matches_brute_force(mask):
    """Проверяет, что D_H совпадает с полным перебором разбиений."""
    h = TripleSystem(6, mask)
    result = optimal_partitions(h)
    assert result.d_h == _brute_d_h(h)
    for p in result.witnesses:
        assert classify_edges(h, p).d_p == result.d_h


def test_iter_optimal_partitions_agrees_with_total(t5):
    """Проверяет, что ленивый перебор выдаёт все оптимальные разбиения без повторов."""
    result = optimal_partitions(t5)
    listed = list(iter_optimal_partitions(t5))
    assert len(listed) == result.total
    assert len(set(listed)) == len(listed)
    assert all(classify_edges(t5, p).d_p == 1 for p in listed)
    assert list(iter_optimal_partitions(t5, d_h=1)) == listed


def test_in_forb_eta(t5, k4):
    """Проверяет принадлежность Forb(T5, eta) для T5 и K4."""
    assert not in_forb_eta(t5, 0.5)
    assert in_forb_eta(k4, 0.02)
    assert not in_forb_eta(k4, 0.01)


def test_rich_edge_and_poor_vertex():
    """Проверяет богатое ребро {0, 4, 5} и бедную вершину 4."""
    h, p = _b3_plus_rich_edge()
    report = rich_edges(h, p, 0.1)
    assert len(report.rich_edges) == 1
    edge = report.rich_edges[0]
    assert edge.edge == (0, 4, 5)
    assert edge.x == 0
    assert (edge.rich, edge.poor) == (5, 4)
    assert edge.rich_link == edge.poor_link == 3
    assert report.poor_vertices == {4}
    assert report.rich_counts_by_x() == {0: 1}
    assert report.poor_vertex_bound_holds(0.1)
    assert not report.poor_vertex_bound_holds(0.01)


def test_rich_edges_above_threshold_are_ignored():
    """Проверяет пустой список богатых рёбер при большом пороге."""
    h, p = _b3_plus_rich_edge()
    assert rich_edges(h, p, 0.5).rich_edges == ()
    with pytest.raises(InvalidArgumentError):
        rich_edges(h, p, 1.5)


def test_semibipartite_core_drops_shadow_pairs():
    """Проверяет удаление рёбер над парами теневого графа."""
    h, p = _b3_plus_rich_edge()
    assert shadow_graph(h, p).edge_list() == [(0, 4), (0, 5)]
    core = semibipartite_core(h, p)
    assert core.edge_count == 6
    assert classify_edges(core, p).d_p == 0
    assert core.is_subsystem_of(h)


def test_phi_image_is_semibipartite_over_core():
    """Проверяет, что образ отображения согласован и содержит ядро."""
    h, p = _b3_plus_rich_edge()
    assert phi_degree_lower_bound(h, p) == 3
    assert phi_choice_count(h, p) == 6
    core = semibipartite_core(h, p)
    image = phi_image(h, p, seed=7)
    assert core.is_subsystem_of(image)
    assert classify_edges(image, p).d_p == 0
    assert phi_image(h, p, seed=7) == image
    full = phi_image(h, p, p_add=1.0)
    assert full.edge_count == core.edge_count + 6


def test_bad_vertex_check_on_consistent_system(b3_12):
    """Проверяет отсутствие плохих вершин в согласованной системе."""
    h, p = b3_12
    assert bad_vertex_check(h, p, 0.05).holds


def test_bad_vertex_check_flags_dense_yy_link():
    """Проверяет нарушение при плотных связях в полной системе."""
    h = TripleSystem.complete(6)
    p = OrderedPartition.from_x(6, [0, 1, 2])
    report = bad_vertex_check(h, p, 0.01)
    assert report.x_xx == (0, 1, 2)
    assert report.y_both == (3, 4, 5)
    assert not report.holds


def test_conditions_hold_on_b3():
    """Проверяет выполнение условий (1)-(5) на B3(6)."""
    h, _ = build_b3(6)
    flags = classify_conditions(h, DEFAULT_THRESHOLDS)
    assert flags.as_dict() == {f'c{k}': True for k in range(1, 6)}
    assert flags.small_shadow
    assert flags.partitions_checked == 1
    assert flags.d_h == 0


def test_conditions_on_t5_report_outer_edge(t5):
    """Проверяет, что для T5 нарушено условие (4) и указано ребро."""
    flags = classify_conditions(t5, DEFAULT_THRESHOLDS)
    assert flags.d_h == 1
    assert flags.partitions_checked == optimal_partitions(t5).total
    assert not flags.c4
    assert flags.witnesses[4].edge is not None


def test_thresholds_are_validated():
    """Проверяет отказ на порогах вне (0, 1)."""
    with pytest.raises(InvalidArgumentError):
        Thresholds(eta=0.0, mu=0.1, alpha=0.1, beta=0.1)
    with pytest.raises(InvalidArgumentError):
        Thresholds(eta=0.1, mu=0.1, alpha=1.0, beta=0.1)


@settings(max_examples=80, deadline=None)
@given(
    mask=st.integers(min_value=0, max_value=(1 << 35) - 1),
    x_mask=st.integers(min_value=0, max_value=(1 << 7) - 1),
)
def test_semibipartite_core_is_idempotent_subsystem(mask, x_mask):
    """Проверяет, что ядро — подсистема и повторное взятие его не меняет."""
    h = TripleSystem(7, mask)
    p = OrderedPartition(7, x_mask)
    core = semibipartite_core(h, p)
    assert core.is_subsystem_of(h)
    assert semibipartite_core(core, p) == core
    assert shadow_graph(core, p).size == 0


@settings(max_examples=100, deadline=None)
@given(
    mask=st.integers(min_value=0, max_value=(1 << 20) - 1),
    extra=st.integers(min_value=0, max_value=(1 << 20) - 1),
)
def test_contains_t5_is_monotone(mask, extra):
    """Проверяет, что добавление рёбер не уничтожает найденный T5."""
    h = TripleSystem(6, mask)
    bigger = h.with_edges(extra)
    assert bigger.edge_count >= h.edge_count
    if contains_t5(h):
        assert contains_t5(bigger)

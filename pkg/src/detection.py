from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import ceil, comb
from typing import TYPE_CHECKING, Iterator

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError
from .hypergraph import (
    LinkSides,
    OrderedPartition,
    PairGraph,
    TripleSystem,
    all_pairs,
    all_triples,
    inside_mask,
    iter_bits,
    link,
    neighborhood_mask,
    pair_triples_mask,
    relabel,
    shadow_graph,
    triple_index,
    triples_by_x_count,
    vertex_triple_masks,
)

if TYPE_CHECKING:
    from .constructions import Thresholds

DEFAULT_PARTITION_CAP = 24
DEFAULT_WITNESS_CAP = 64

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class T5Witness:
    """Копия T5: пара-вершина {u, v}, основание {a, b, c} и четыре ребра."""
    apex: tuple[int, int]
    base: tuple[int, int, int]
    edges: tuple[tuple[int, int, int], ...]

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self.apex + self.base))


@dataclass(frozen=True)
class T5Result:
    found: bool
    witness: T5Witness | None = None

    def __bool__(self) -> bool:
        return self.found


def _vertex_links(h: TripleSystem) -> list[int]:
    """Маски пар {u, v}, дополняющих вершину до ребра (по всем вершинам)."""
    links = [0] * h.n
    table = all_triples(h.n)
    for idx in iter_bits(h.edges):
        a, b, c = table[idx]
        links[a] |= 1 << (comb(c, 2) + b)
        links[b] |= 1 << (comb(c, 2) + a)
        links[c] |= 1 << (comb(b, 2) + a)
    return links


def contains_t5(h: TripleSystem) -> T5Result:
    """Ищет копию T5 = {uva, uvb, uvc, abc}.

    Для каждого ребра abc пересекаются графы связей трёх его вершин:
    общая пара {u, v} и есть вершина копии. Пары, задевающие само ребро,
    в пересечение не попадают автоматически.
    """
    links = _vertex_links(h)
    table = all_triples(h.n)
    for idx in iter_bits(h.edges):
        a, b, c = table[idx]
        common = links[a] & links[b] & links[c]
        if common:
            pair = (common & -common).bit_length() - 1
            u, v = all_pairs(h.n)[pair]
            edges = tuple(sorted(
                tuple(sorted(t)) for t in (
                    (u, v, a), (u, v, b), (u, v, c), (a, b, c),
                )
            ))
            return T5Result(
                True,
                T5Witness(apex=(u, v), base=(a, b, c), edges=edges),
            )
    return T5Result(False)


def has_independent_neighborhoods(h: TripleSystem) -> bool:
    """True, если ни одно соседство N(u,v) не содержит ребра."""
    n = h.n
    for u, v in all_pairs(n):
        nb = neighborhood_mask(h, u, v)
        if nb.bit_count() >= 3 and h.edges & inside_mask(n, nb):
            return False
    return True


def _vertex_order(h: TripleSystem) -> list[int]:
    """Порядок ветвления: жадно замыкаем как можно больше рёбер.

    Чем раньше ребро целиком попадает в уже размеченный префикс, тем
    раньше его несогласованность начинает отсекать ветви.
    """
    n = h.n
    vt = vertex_triple_masks(n)
    degree = [(h.edges & vt[v]).bit_count() for v in range(n)]
    order: list[int] = []
    chosen = 0
    remaining = set(range(n))
    while remaining:
        def key(v: int) -> tuple[int, int, int]:
            closed = h.edges & vt[v] & inside_mask(n, chosen | 1 << v)
            return closed.bit_count(), degree[v], -v

        best = max(remaining, key=key)
        order.append(best)
        chosen |= 1 << best
        remaining.remove(best)
    return order


class _PartitionSearch:
    """Перебор всех 2^n упорядоченных разбиений с отсечением по стоимости.

    Вершины размечаются по одной (в порядке _vertex_order). Рёбра, чья
    старшая вершина только что размечена, становятся определёнными; их
    несогласованность добавляется к стоимости. Ветвь отсекается, когда
    стоимость превысила текущую границу `bound`.
    """

    def __init__(self, h: TripleSystem) -> None:
        self.n = h.n
        self.order = _vertex_order(h)
        perm = [0] * h.n
        for new, old in enumerate(self.order):
            perm[old] = new
        work = relabel(h, perm)
        self.shift = [comb(v, 2) for v in range(h.n)]
        self.edges_at = [
            (work.edges >> comb(v, 3)) & ((1 << comb(v, 2)) - 1)
            for v in range(h.n)
        ]
        self.totals = [e.bit_count() for e in self.edges_at]
        self.bound = h.edge_count
        self.nodes = 0

    def to_original(self, x_new: int) -> int:
        x = 0
        for i in iter_bits(x_new):
            x |= 1 << self.order[i]
        return x

    def walk(self) -> Iterator[tuple[int, int]]:
        """Выдаёт (маска X в исходной разметке, число несогласованных)."""
        for x_new, cost in self._descend(0, 0, 0, 0, 0):
            yield self.to_original(x_new), cost

    def _descend(
        self,
        v: int,
        x_mask: int,
        xx: int,
        xy: int,
        cost: int,
    ) -> Iterator[tuple[int, int]]:
        self.nodes += 1
        if cost > self.bound:
            return
        if v == self.n:
            yield x_mask, cost
            return
        e = self.edges_at[v]
        total = self.totals[v]
        shift = self.shift[v]
        low_x = x_mask
        low_y = ((1 << v) - 1) & ~x_mask
        # v в X: согласованы рёбра, у которых ровно одна из двух младших в X
        yield from self._descend(
            v + 1,
            x_mask | 1 << v,
            xx | low_x << shift,
            xy | low_y << shift,
            cost + total - (e & xy).bit_count(),
        )
        # v в Y: обе младшие вершины должны быть в X
        yield from self._descend(
            v + 1,
            x_mask,
            xx,
            xy | low_x << shift,
            cost + total - (e & xx).bit_count(),
        )


def _check_cap(h: TripleSystem, cap: int) -> None:
    if h.n > cap:
        raise ResourceLimitError(
            f'partition sweep over 2^{h.n} partitions exceeds cap n<={cap}'
        )


def is_semibipartite(
    h: TripleSystem,
    *,
    cap: int = DEFAULT_PARTITION_CAP,
) -> OrderedPartition | None:
    """Возвращает разбиение без несогласованных рёбер или None.

    Raises:
        ResourceLimitError: n больше cap.
    """
    _check_cap(h, cap)
    search = _PartitionSearch(h)
    search.bound = 0
    for x_mask, _ in search.walk():
        return OrderedPartition(h.n, x_mask)
    return None


@dataclass(frozen=True)
class OptimalPartitionResult:
    """Минимум несогласованных рёбер D_H и оптимальные разбиения.

    Attributes:
        d_h: Минимальное число несогласованных рёбер.
        witnesses: Оптимальные разбиения (не более witness_cap штук),
            отсортированные по маске X.
        total: Точное число всех оптимальных разбиений.
    """
    d_h: int
    witnesses: tuple[OrderedPartition, ...]
    total: int

    @property
    def truncated(self) -> bool:
        return self.total > len(self.witnesses)


def optimal_partitions(
    h: TripleSystem,
    witness_cap: int = DEFAULT_WITNESS_CAP,
    *,
    cap: int = DEFAULT_PARTITION_CAP,
) -> OptimalPartitionResult:
    """Точный минимум по всем 2^n упорядоченным разбиениям.

    Перебор с границей: граница опускается при каждом улучшении, ветви с
    большей стоимостью отсекаются, равные — досчитываются, поэтому число
    оптимальных разбиений точное даже при усечённом списке свидетелей.

    Raises:
        ResourceLimitError: n больше cap.
    """
    _check_cap(h, cap)
    search = _PartitionSearch(h)
    best = search.bound
    total = 0
    found: list[int] = []
    for x_mask, cost in search.walk():
        if cost < best or total == 0:
            best = cost
            search.bound = cost
            total = 0
            found = []
        total += 1
        if len(found) < witness_cap:
            found.append(x_mask)
    logger.debug(
        'Optimal partitions: n=%d, d_h=%d, total=%d, nodes=%d',
        h.n,
        best,
        total,
        search.nodes,
    )
    return OptimalPartitionResult(
        d_h=best,
        witnesses=tuple(OrderedPartition(h.n, x) for x in sorted(found)),
        total=total,
    )


def iter_optimal_partitions(
    h: TripleSystem,
    *,
    cap: int = DEFAULT_PARTITION_CAP,
    d_h: int | None = None,
) -> Iterator[OrderedPartition]:
    """Лениво перечисляет все оптимальные разбиения (в порядке обхода).

    Если D_H уже известен, его можно передать и не считать повторно.
    """
    if d_h is None:
        d_h = optimal_partitions(h, 0, cap=cap).d_h
    search = _PartitionSearch(h)
    search.bound = d_h
    for x_mask, _ in search.walk():
        yield OrderedPartition(h.n, x_mask)


def in_forb_eta(
    h: TripleSystem,
    eta: float,
    *,
    cap: int = DEFAULT_PARTITION_CAP,
) -> bool:
    """Принадлежность классу: без T5 и D_H <= eta * n^3."""
    if contains_t5(h):
        return False
    return optimal_partitions(h, 0, cap=cap).d_h <= eta * h.n ** 3


@dataclass(frozen=True)
class RichEdge:
    """alpha-богатое ребро {x, y, z}: x ∈ X, y, z ∈ Y.

    `rich` — вершина с большей связью L_X(x, ·), `poor` — бедная вершина.
    """
    edge: tuple[int, int, int]
    x: int
    rich: int
    poor: int
    rich_link: int
    poor_link: int


@dataclass(frozen=True)
class RichEdgeReport:
    rich_edges: tuple[RichEdge, ...]
    alpha: float
    n: int

    @property
    def poor_vertices(self) -> frozenset[int]:
        return frozenset(e.poor for e in self.rich_edges)

    def rich_counts_by_x(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for e in self.rich_edges:
            counts[e.x] = counts.get(e.x, 0) + 1
        return counts

    def poor_vertex_bound_holds(self, mu: float) -> bool:
        """Различных бедных вершин не больше 2*mu*n."""
        return len(self.poor_vertices) <= 2 * mu * self.n

    def rich_count_bound_holds(self, mu: float) -> bool:
        """У каждой x ∈ X не больше 2*mu*n^2 богатых рёбер."""
        limit = 2 * mu * self.n ** 2
        return all(c <= limit for c in self.rich_counts_by_x().values())


def rich_edges(
    h: TripleSystem,
    p: OrderedPartition,
    alpha: float,
) -> RichEdgeReport:
    """Находит alpha-богатые рёбра и их бедные вершины.

    Ребро xyz (x ∈ X; y, z ∈ Y) богатое, если
    max(|L_X(x,y)|, |L_X(x,z)|) > alpha*n. Бедная вершина — та, чья пара
    с x даёт меньшую связь; при равенстве бедной считается меньшая вершина.
    """
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f'alpha must be in (0, 1), got {alpha}')
    if h.n != p.n:
        raise InvalidArgumentError('system and partition differ in n')
    n = h.n
    threshold = alpha * n
    table = all_triples(n)
    found: list[RichEdge] = []
    for idx in iter_bits(h.edges & triples_by_x_count(n, p.x_mask)[1]):
        triple = table[idx]
        x = next(v for v in triple if p.in_x(v))
        y, z = (v for v in triple if v != x)
        ly = (neighborhood_mask(h, x, y) & p.x_mask).bit_count()
        lz = (neighborhood_mask(h, x, z) & p.x_mask).bit_count()
        if max(ly, lz) <= threshold:
            continue
        if ly <= lz:
            found.append(RichEdge(triple, x, z, y, lz, ly))
        else:
            found.append(RichEdge(triple, x, y, z, ly, lz))
    return RichEdgeReport(tuple(found), alpha, n)


def semibipartite_core(h: TripleSystem, p: OrderedPartition) -> TripleSystem:
    """Удаляет все рёбра, содержащие пару теневого графа."""
    g = shadow_graph(h, p)
    doomed = 0
    for u, v in g.edge_list():
        doomed |= pair_triples_mask(h.n, u, v)
    return h.without_edges(doomed)


def _phi_candidates(h: TripleSystem, p: OrderedPartition) -> list[int]:
    """Согласованные тройки axy (a ∈ X) над парами теневого графа."""
    g = shadow_graph(h, p)
    found: set[int] = set()
    for u, v in g.edge_list():
        x, y = (u, v) if p.in_x(u) else (v, u)
        for a in iter_bits(p.x_mask & ~(1 << x)):
            found.add(triple_index(a, x, y, h.n))
    return sorted(found)


def phi_choice_count(h: TripleSystem, p: OrderedPartition) -> int:
    """Число свободных троек, из которых отображение выбирает рёбра."""
    return len(_phi_candidates(h, p))


def phi_degree_lower_bound(h: TripleSystem, p: OrderedPartition) -> int:
    """Нижняя оценка (|X|-1)|G|/2 на число свободных троек."""
    g = shadow_graph(h, p)
    return ceil((p.x_mask.bit_count() - 1) * g.size / 2)


def phi_image(
    h: TripleSystem,
    p: OrderedPartition,
    seed: int | None = None,
    *,
    p_add: float = 0.5,
) -> TripleSystem:
    """Полное отображение ремонта: ядро плюс случайные рёбра axy.

    Сначала удаляются рёбра над парами теневого графа, затем для каждой
    пары xy (x ∈ X, y ∈ Y) независимо добавляются тройки axy, a ∈ X.
    """
    core = semibipartite_core(h, p)
    candidates = _phi_candidates(h, p)
    rng = np.random.default_rng(seed)
    draws = rng.random(len(candidates))
    added = 0
    for idx, r in zip(candidates, draws):
        if r < p_add:
            added |= 1 << idx
    return core.with_edges(added)


@dataclass(frozen=True)
class BadVertexReport:
    """Ограничения на графы связей вершин при оптимальном разбиении.

    Attributes:
        x_xx: Вершины x ∈ X с |L_XX(x)| > 2*mu*n^2.
        y_xy: Вершины y ∈ Y с |L_XY(y)| > 2*mu*n^2.
        y_both: Вершины y ∈ Y, у которых обе |L_XX(y)|, |L_YY(y)|
            не меньше 2*mu*n^2.
    """
    x_xx: tuple[int, ...]
    y_xy: tuple[int, ...]
    y_both: tuple[int, ...]

    @property
    def holds(self) -> bool:
        return not (self.x_xx or self.y_xy or self.y_both)


def bad_vertex_check(
    h: TripleSystem,
    p: OrderedPartition,
    mu: float,
) -> BadVertexReport:
    limit = 2 * mu * h.n ** 2
    x_xx = tuple(
        x for x in iter_bits(p.x_mask)
        if link(h, x, p, LinkSides.XX).size > limit
    )
    y_xy: list[int] = []
    y_both: list[int] = []
    for y in iter_bits(p.y_mask):
        if link(h, y, p, LinkSides.XY).size > limit:
            y_xy.append(y)
        xx = link(h, y, p, LinkSides.XX).size
        yy = link(h, y, p, LinkSides.YY).size
        if min(xx, yy) >= limit:
            y_both.append(y)
    return BadVertexReport(x_xx, tuple(y_xy), tuple(y_both))


@dataclass(frozen=True)
class ConditionWitness:
    """Конкретное нарушение условия: разбиение плюс вершина или ребро."""
    partition: OrderedPartition
    vertex: int | None = None
    edge: tuple[int, int, int] | None = None
    detail: str = ''


@dataclass(frozen=True)
class ConditionFlags:
    """Условия (1)-(5) по всем оптимальным разбиениям.

    Флаг ck ложен ровно тогда, когда в `witnesses` есть свидетель k.
    """
    witnesses: dict[int, ConditionWitness] = field(default_factory=dict)
    small_shadow: bool = True
    partitions_checked: int = 0
    d_h: int = 0

    @property
    def c1(self) -> bool:
        return 1 not in self.witnesses

    @property
    def c2(self) -> bool:
        return 2 not in self.witnesses

    @property
    def c3(self) -> bool:
        return 3 not in self.witnesses

    @property
    def c4(self) -> bool:
        return 4 not in self.witnesses

    @property
    def c5(self) -> bool:
        return 5 not in self.witnesses

    def as_dict(self) -> dict[str, bool]:
        return {f'c{k}': k not in self.witnesses for k in range(1, 6)}


def _first_edge(mask: int, n: int) -> tuple[int, int, int]:
    return all_triples(n)[(mask & -mask).bit_length() - 1]


def _partition_violations(
    h: TripleSystem,
    p: OrderedPartition,
    t: Thresholds,
) -> dict[int, ConditionWitness]:
    n = h.n
    out: dict[int, ConditionWitness] = {}
    for x in iter_bits(p.x_mask):
        size = link(h, x, p, LinkSides.YY).size
        if size >= t.beta * n * n:
            out[1] = ConditionWitness(p, vertex=x, detail=f'|L_YY|={size}')
            break
    for y in iter_bits(p.y_mask):
        size = link(h, y, p, LinkSides.YY).size
        if size >= 2 * t.mu * n * n:
            out[2] = ConditionWitness(p, vertex=y, detail=f'|L_YY|={size}')
            break
    report = rich_edges(h, p, t.alpha)
    if report.rich_edges:
        first = report.rich_edges[0]
        out[3] = ConditionWitness(
            p,
            vertex=first.poor,
            edge=first.edge,
            detail=f'rich link {first.rich_link}',
        )
    by_count = triples_by_x_count(n, p.x_mask)
    outer = h.edges & (by_count[0] | by_count[3])
    if outer:
        out[4] = ConditionWitness(p, edge=_first_edge(outer, n))
    single = h.edges & by_count[1]
    if single:
        out[5] = ConditionWitness(p, edge=_first_edge(single, n))
    return out


def classify_conditions(
    h: TripleSystem,
    thresholds: Thresholds,
    *,
    cap: int = DEFAULT_PARTITION_CAP,
) -> ConditionFlags:
    """Проверяет условия (1)-(5) буквально на каждом оптимальном разбиении.

    Для каждого нарушенного условия сохраняется первый найденный свидетель.
    Дополнительно отмечается, у всех ли оптимальных разбиений теневой граф
    меньше 100*alpha*n^2.

    Raises:
        ResourceLimitError: n больше cap (выборка вместо полного перебора
            изменила бы смысл проверки).
    """
    _check_cap(h, cap)
    n = h.n
    witnesses: dict[int, ConditionWitness] = {}
    small_shadow = True
    checked = 0
    d_h = optimal_partitions(h, 0, cap=cap).d_h
    for p in iter_optimal_partitions(h, cap=cap, d_h=d_h):
        checked += 1
        for k, w in _partition_violations(h, p, thresholds).items():
            witnesses.setdefault(k, w)
        if shadow_graph(h, p).size >= 100 * thresholds.alpha * n * n:
            small_shadow = False
    logger.debug(
        'Conditions over %d optimal partitions: violated=%s',
        checked,
        sorted(witnesses),
    )
    return ConditionFlags(
        witnesses=witnesses,
        small_shadow=small_shadow,
        partitions_checked=checked,
        d_h=d_h,
    )

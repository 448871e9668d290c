from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from math import ceil, comb, floor
from typing import Iterator, Optional, Sequence

import mpmath
import numpy as np

from . import DEFAULT_SEED
from .constructions import Thresholds
from .errors import (
    InvalidArgumentError,
    InvariantViolationError,
    ResourceLimitError,
)
from .hypergraph import (
    LinkSides,
    OrderedPartition,
    PairGraph,
    TripleSystem,
    all_pairs,
    iter_bits,
    link,
    neighborhood_mask,
)

EXACT_ENTROPY_N = 64
LOG_SLACK = 1e-9
MP_DPS = 80
DEFAULT_X_GRID = tuple(round(0.05 * i, 2) for i in range(1, 10))

MATCHCOUNT_MAX_N = 8
MATCHCOUNT_CHUNK = 1 << 20

EXACT_SIDE_LIMIT = 20
SUBSET_CHUNK = 1 << 14
DEFAULT_RESTARTS = 16

logger = logging.getLogger(__name__)


def _fraction(x: float | Fraction | int) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def binary_entropy(x: float) -> float:
    """H(x) = -x log2 x - (1-x) log2 (1-x).

    Raises:
        InvalidArgumentError: x вне (0, 1).
    """
    if not 0 < x < 1:
        raise InvalidArgumentError(f'entropy argument must be in (0, 1), got {x}')
    return -x * math.log2(x) - (1 - x) * math.log1p(-x) / math.log(2)


def _entropy_mp(x: mpmath.mpf) -> mpmath.mpf:
    return -x * mpmath.log(x, 2) - (1 - x) * mpmath.log(1 - x, 2)


def _mp_value(x: Fraction) -> mpmath.mpf:
    return mpmath.mpf(x.numerator) / x.denominator


def _below_entropy_power(value: int, x: Fraction, n: int) -> bool:
    """value < 2^(H(x) n) с MP_DPS знаками."""
    with mpmath.workdps(MP_DPS):
        return mpmath.log(value, 2) < n * _entropy_mp(_mp_value(x))


@dataclass(frozen=True)
class EntropyFacts:
    """Два факта о биномиальных коэффициентах при k = floor(x n).

    Attributes:
        single: C(n, k) < 2^(H(x) n).
        tail: sum_{i<=k} C(n, i) < 2^(H(x) n).
        exact: Сравнение шло по точным целым с высокой точностью.
    """
    n: int
    x: float
    k: int
    single: bool
    tail: bool
    exact: bool


def entropy_facts_check(
    n: int,
    x: float,
    *,
    exact: Optional[bool] = None,
) -> EntropyFacts:
    """Проверяет оба энтропийных неравенства.

    Двоичные логарифмы сравниваются в double; если разность попадает в
    полосу LOG_SLACK, сравнение повторяется в mpmath. При exact (по
    умолчанию для n <= 64) сразу берутся точные целые и mpmath.

    Raises:
        InvalidArgumentError: x вне (0, 1/2) или n < 1.
    """
    if not 0 < x < 0.5:
        raise InvalidArgumentError(f'x must be in (0, 1/2), got {x}')
    if n < 1:
        raise InvalidArgumentError(f'n must be positive, got {n}')
    xf = _fraction(x)
    k = floor(xf * n)
    single_value = comb(n, k)
    tail_value = sum(comb(n, i) for i in range(k + 1))
    if exact is None:
        exact = n <= EXACT_ENTROPY_N

    if exact:
        single = _below_entropy_power(single_value, xf, n)
        tail = _below_entropy_power(tail_value, xf, n)
    else:
        rhs = binary_entropy(float(xf)) * n
        verdicts = []
        for value in (single_value, tail_value):
            diff = rhs - math.log2(value)
            if abs(diff) <= LOG_SLACK * max(1.0, rhs):
                logger.debug('Entropy comparison in slack band; escalating')
                verdicts.append(_below_entropy_power(value, xf, n))
            else:
                verdicts.append(diff > 0)
        single, tail = verdicts
    return EntropyFacts(n=n, x=x, k=k, single=single, tail=tail, exact=exact)


def tail_fact_threshold(
    n: int,
    grid: Sequence[float] = DEFAULT_X_GRID,
) -> Optional[float]:
    """Наибольшее x сетки, до которого (включительно) хвостовой факт верен."""
    found = None
    for x in sorted(grid):
        if not entropy_facts_check(n, x).tail:
            break
        found = x
    return found


def chernoff_bound(m: int, p: float, a: float) -> float:
    """exp(-a^2 / (2 p m)) для нижнего хвоста суммы m испытаний Бернулли."""
    if m < 1:
        raise InvalidArgumentError(f'm must be >= 1, got {m}')
    if not 0 < p <= 1:
        raise InvalidArgumentError(f'p must be in (0, 1], got {p}')
    if a <= 0:
        raise InvalidArgumentError(f'deviation must be positive, got {a}')
    return math.exp(-a * a / (2 * p * m))


@dataclass(frozen=True)
class ChernoffTrial:
    m: int
    p: float
    a: float
    trials: int
    observed: float
    bound: float
    margin: float

    @property
    def holds(self) -> bool:
        return self.observed <= self.bound + self.margin


def chernoff_empirical(
    m: int,
    p: float,
    a: float,
    trials: int = 100_000,
    seed: int = DEFAULT_SEED,
    *,
    chunks: int = 8,
) -> ChernoffTrial:
    """Частота события S < mp - a по выборке сумм Бернулли.

    Каждый кусок выборки получает своё зерно из SeedSequence(seed).spawn,
    поэтому результат не зависит от того, кто считает куски.
    """
    bound = chernoff_bound(m, p, a)
    if trials < 1:
        raise InvalidArgumentError('trials must be >= 1')
    sizes = [trials // chunks + (i < trials % chunks) for i in range(chunks)]
    hits = 0
    for child, size in zip(np.random.SeedSequence(seed).spawn(chunks), sizes):
        if not size:
            continue
        sums = np.random.default_rng(child).binomial(m, p, size=size)
        hits += int(np.count_nonzero(sums < m * p - a))
    observed = hits / trials
    margin = 3 * math.sqrt(max(bound * (1 - bound), 0.0) / trials)
    return ChernoffTrial(m, p, a, trials, observed, bound, margin)


def greedy_matching(g: PairGraph) -> PairGraph:
    """Жадное максимальное паросочетание в колекс-порядке пар.

    Raises:
        InvariantViolationError: Размер меньше ceil(|g| / (2n)).
    """
    table = all_pairs(g.n)
    used = 0
    out = 0
    for idx in iter_bits(g.pairs):
        a, b = table[idx]
        if used >> a & 1 or used >> b & 1:
            continue
        out |= 1 << idx
        used |= 1 << a | 1 << b
    matching = PairGraph(g.n, out)
    need = -(-g.size // (2 * g.n))
    if matching.size < need:
        raise InvariantViolationError(
            f'greedy matching of size {matching.size} < {need}'
        )
    return matching


@dataclass(frozen=True)
class MatchCountResult:
    """Число графов на [N], где M = {01, 23, ...} — наибольшее паросочетание."""
    n_vertices: int
    m: int
    exact: int
    bound: int

    @property
    def holds(self) -> bool:
        return self.exact <= self.bound


def matchcount_bound(n_vertices: int, m: int) -> int:
    free = n_vertices - 2 * m
    return 2 ** (2 * m * m - 2 * m) * (free + 2 ** (free + 1)) ** m


def _matchings(vertices: tuple[int, ...], size: int) -> Iterator[list[tuple[int, int]]]:
    if size == 0:
        yield []
        return
    if len(vertices) < 2 * size:
        return
    first, rest = vertices[0], vertices[1:]
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for tail in _matchings(remaining, size - 1):
            yield [(first, partner)] + tail
    yield from _matchings(rest, size)


def max_matching_count(n_vertices: int, m: int) -> MatchCountResult:
    """Полный перебор графов, содержащих M, без паросочетания размера m+1.

    Граф содержит M, поэтому M наибольшее ровно тогда, когда в графе нет
    ни одного из (m+1)-паросочетаний K_N; проверка идёт по маскам numpy.

    Raises:
        ResourceLimitError: N > 8.
        InvalidArgumentError: не выполнено 0 <= 2m <= N.
    """
    if n_vertices > MATCHCOUNT_MAX_N:
        raise ResourceLimitError(
            f'matchcount sweep is capped at N={MATCHCOUNT_MAX_N}'
        )
    if m < 0 or 2 * m > n_vertices or n_vertices < 1:
        raise InvalidArgumentError(f'need 0 <= 2m <= N, got N={n_vertices}, m={m}')
    n = n_vertices
    total_pairs = comb(n, 2)

    def pair_bit(a: int, b: int) -> int:
        return 1 << (comb(b, 2) + a)

    m_mask = 0
    for i in range(m):
        m_mask |= pair_bit(2 * i, 2 * i + 1)
    larger = [
        sum(pair_bit(a, b) for a, b in matching)
        for matching in _matchings(tuple(range(n)), m + 1)
    ]
    free = [i for i in range(total_pairs) if not m_mask >> i & 1]
    count = 0
    for start in range(0, 1 << len(free), MATCHCOUNT_CHUNK):
        stop = min(start + MATCHCOUNT_CHUNK, 1 << len(free))
        idx = np.arange(start, stop, dtype=np.uint64)
        graphs = np.full(idx.shape, m_mask, dtype=np.uint64)
        for j, pos in enumerate(free):
            graphs |= ((idx >> np.uint64(j)) & np.uint64(1)) << np.uint64(pos)
        blocked = np.zeros(idx.shape, dtype=bool)
        for mm in larger:
            target = np.uint64(mm)
            blocked |= (graphs & target) == target
        count += int(np.count_nonzero(~blocked))
    return MatchCountResult(n, m, count, matchcount_bound(n, m))


def max_matching_table(max_vertices: int = 7) -> list[MatchCountResult]:
    """Все пары (N, m) с 1 <= m и 2m <= N <= max_vertices."""
    return [
        max_matching_count(n, m)
        for n in range(2, max_vertices + 1)
        for m in range(1, n // 2 + 1)
    ]


@dataclass(frozen=True)
class TripartiteCylinder:
    """Трёхдольный граф на A, B, C по m вершин: три булевы матрицы m x m.

    ab[a, b], bc[b, c], ca[c, a] — наличие соответствующих рёбер.
    """
    ab: np.ndarray
    bc: np.ndarray
    ca: np.ndarray

    def __post_init__(self) -> None:
        shapes = {self.ab.shape, self.bc.shape, self.ca.shape}
        if len(shapes) != 1:
            raise InvalidArgumentError('cylinder blocks differ in shape')
        (shape,) = shapes
        if len(shape) != 2 or shape[0] != shape[1]:
            raise InvalidArgumentError('cylinder blocks must be square')

    @property
    def m(self) -> int:
        return self.ab.shape[0]


def triangle_count_tripartite(cylinder: TripartiteCylinder) -> int:
    """Число треугольников abc, по одной вершине из каждой доли.

    Для каждой a ∈ A строки C-соседей упаковываются в байты; вклад ребра
    ab — число общих C-соседей a и b (побитовое И и popcount).
    """
    c_of_a = np.packbits(cylinder.ca.T.astype(bool), axis=1)
    c_of_b = np.packbits(cylinder.bc.astype(bool), axis=1)
    total = 0
    for a in range(cylinder.m):
        bs = np.flatnonzero(cylinder.ab[a])
        if bs.size == 0:
            continue
        common = c_of_b[bs] & c_of_a[a]
        total += int(np.bitwise_count(common).sum())
    return total


def cylinder_from_pair_graph(
    g: PairGraph,
    parts: Sequence[Sequence[int]],
) -> TripartiteCylinder:
    """Переводит PairGraph с тремя равными долями в цилиндр.

    Raises:
        InvalidArgumentError: Доли не равны или пересекаются; есть ребро
            внутри доли или вне долей.
    """
    if len(parts) != 3 or len({len(part) for part in parts}) != 1:
        raise InvalidArgumentError('need three parts of equal size')
    where: dict[int, tuple[int, int]] = {}
    for k, part in enumerate(parts):
        for i, v in enumerate(part):
            if v in where:
                raise InvalidArgumentError(f'vertex {v} is in two parts')
            where[v] = (k, i)
    m = len(parts[0])
    blocks = [np.zeros((m, m), dtype=bool) for _ in range(3)]
    for u, v in g.edge_list():
        if u not in where or v not in where:
            raise InvalidArgumentError(f'edge {u}-{v} leaves the parts')
        (ku, iu), (kv, iv) = where[u], where[v]
        if ku == kv:
            raise InvalidArgumentError(f'edge {u}-{v} lies inside a part')
        if (kv - ku) % 3 == 1:
            blocks[ku][iu, iv] = True
        else:
            blocks[kv][iv, iu] = True
    return TripartiteCylinder(*blocks)


def random_cylinder(m: int, density: float, seed: int | None = None) -> TripartiteCylinder:
    if m < 1:
        raise InvalidArgumentError('m must be >= 1')
    if not 0 <= density <= 1:
        raise InvalidArgumentError(f'density must be in [0, 1], got {density}')
    rng = np.random.default_rng(seed)
    return TripartiteCylinder(*(rng.random((m, m)) < density for _ in range(3)))


@dataclass(frozen=True)
class TriangleTrial:
    """Серия случайных цилиндров плотности 1/l против ожидания m^3/l^3."""
    m: int
    l: int
    tolerance: float
    counts: tuple[int, ...]

    @property
    def expected(self) -> Fraction:
        return Fraction(self.m ** 3, self.l ** 3)

    @property
    def within(self) -> int:
        low = (1 - _fraction(self.tolerance)) * self.expected
        high = (1 + _fraction(self.tolerance)) * self.expected
        return sum(low <= c <= high for c in self.counts)


def triangle_counting_trial(
    m: int = 300,
    l: int = 2,
    runs: int = 20,
    seed: int = DEFAULT_SEED,
    *,
    tolerance: float = 0.1,
) -> TriangleTrial:
    if l < 1:
        raise InvalidArgumentError('l must be >= 1')
    seeds = np.random.SeedSequence(seed).spawn(runs)
    counts = tuple(
        triangle_count_tripartite(random_cylinder(m, 1 / l, child))
        for child in seeds
    )
    return TriangleTrial(m, l, tolerance, counts)


class DensityStatus(str, Enum):
    HOLDS_EXACT = 'HOLDS-EXACT'
    HOLDS_UNREFUTED = 'HOLDS-UNREFUTED'
    VIOLATED = 'VIOLATED'
    SKIPPED = 'SKIPPED'


CONDITIONS = ('i', 'ii', 'iii', 'iv', 'v')


@dataclass(frozen=True)
class LowerDensityReport:
    """Статусы пяти условий нижней плотности для одного разбиения.

    Attributes:
        mu: Порог.
        statuses: Условие -> статус.
        witnesses: Условие -> свидетель нарушения (множества и обе части).
        notes: Условие -> пояснение (vacuous, понижение режима).
        downgraded: Условия, переведённые из точного режима в поиск.
    """
    mu: float
    statuses: dict[str, DensityStatus]
    witnesses: dict[str, dict] = field(default_factory=dict)
    notes: dict[str, str] = field(default_factory=dict)
    downgraded: tuple[str, ...] = ()

    @property
    def violated(self) -> tuple[str, ...]:
        return tuple(
            c for c in CONDITIONS if self.statuses[c] is DensityStatus.VIOLATED
        )

    def as_dict(self) -> dict:
        return {
            'mu': self.mu,
            'statuses': {c: self.statuses[c].value for c in CONDITIONS},
            'witnesses': self.witnesses,
            'notes': self.notes,
            'downgraded': list(self.downgraded),
        }


def _min_selection(values: Sequence[int], k: int) -> tuple[int, list[int]]:
    """Минимальная сумма по подмножествам размера >= k и само подмножество."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    chosen = order[:k]
    for i in order[k:]:
        if values[i] >= 0:
            break
        chosen.append(i)
    return sum(values[i] for i in chosen), chosen


class _LowerDensity:
    """Состояние одной проверки: стороны разбиения, связи, пороги."""

    def __init__(
        self,
        h: TripleSystem,
        p: OrderedPartition,
        mu: float,
        rng: np.random.Generator,
        restarts: int,
    ) -> None:
        self.h = h
        self.p = p
        self.n = h.n
        self.mu = _fraction(mu)
        self.rng = rng
        self.restarts = restarts
        self.xs = sorted(p.x)
        self.ys = sorted(p.y)
        self.x_pos = {v: i for i, v in enumerate(self.xs)}
        # связи L_XX(y) в координатах позиций внутри X
        self.y_links = [
            [(self.x_pos[u], self.x_pos[v])
             for u, v in link(h, y, p, LinkSides.XX).edge_list()]
            for y in self.ys
        ]

    def strictly_above(self, value: Fraction) -> int:
        return floor(value) + 1

    def at_least(self, value: Fraction) -> int:
        return max(1, ceil(value))

    # ---- условие (v)

    def condition_v(self) -> DensityStatus:
        gap = abs(3 * len(self.ys) - self.n)
        return (
            DensityStatus.HOLDS_EXACT if gap < 3 * self.mu * self.n
            else DensityStatus.VIOLATED
        )

    # ---- условия (i), (ii): паросочетание против графа

    def _attack_matching(
        self,
        side: list[int],
        partners: list[tuple[int, int]],
        scale: int,
        k_match: int,
        k_partner: int,
    ) -> Optional[dict]:
        """Ищет паросочетание M на side, при котором нарушение находится.

        Для фиксированного M вес партнёрской пары — число рёбер M внутри
        её соседства; оптимальный набор партнёров выбирается точно.
        """
        nbs = [neighborhood_mask(self.h, a, b) for a, b in partners]
        max_size = len(side) // 2

        def slack(matching: list[tuple[int, int]]) -> tuple[int, list[int]]:
            values = [
                scale * sum(nb >> u & nb >> v & 1 for u, v in matching)
                - len(matching)
                for nb in nbs
            ]
            return _min_selection(values, k_partner)

        for _ in range(self.restarts):
            size = int(self.rng.integers(k_match, max_size + 1))
            order = [side[i] for i in self.rng.permutation(len(side))]
            matching = [
                tuple(sorted(order[2 * i:2 * i + 2])) for i in range(size)
            ]
            best, chosen = slack(matching)
            improved = True
            while improved and best > 0:
                improved = False
                for _ in range(4 * len(side)):
                    candidate = self._mutate_matching(matching, side, k_match)
                    value, picks = slack(candidate)
                    if value < best:
                        matching, best, chosen = candidate, value, picks
                        improved = True
                        break
            if best <= 0:
                return {
                    'matching': [list(e) for e in sorted(matching)],
                    'graph': sorted(list(partners[i]) for i in chosen),
                }
        return None

    def _mutate_matching(
        self,
        matching: list[tuple[int, int]],
        side: list[int],
        k_match: int,
    ) -> list[tuple[int, int]]:
        used = {v for e in matching for v in e}
        free = [v for v in side if v not in used]
        out = list(matching)
        move = int(self.rng.integers(3))
        if move == 0 and len(out) > k_match:
            out.pop(int(self.rng.integers(len(out))))
        elif move == 1 and len(free) >= 2:
            a, b = self.rng.choice(len(free), 2, replace=False)
            out.append(tuple(sorted((free[a], free[b]))))
        elif out:
            i = int(self.rng.integers(len(out)))
            pool = free + list(out[i])
            a, b = self.rng.choice(len(pool), 2, replace=False)
            out[i] = tuple(sorted((pool[a], pool[b])))
        return out

    def condition_matching(self, which: str) -> tuple[DensityStatus, dict | None, str]:
        n, mu = self.n, self.mu
        k_match = self.strictly_above(mu * n)
        k_graph = self.strictly_above(mu * n * n)
        if which == 'i':
            side = self.xs
            partners = [(a, b) for a in self.xs for b in self.ys]
            scale = 72
        else:
            side = self.ys
            partners = list(combinations(self.xs, 2))
            scale = 8
        if len(side) // 2 < k_match or len(partners) < k_graph:
            return DensityStatus.HOLDS_EXACT, None, 'vacuous'
        if self.restarts == 0:
            return DensityStatus.SKIPPED, None, 'no search restarts'
        found = self._attack_matching(side, partners, scale, k_match, k_graph)
        if found is None:
            return DensityStatus.HOLDS_UNREFUTED, None, ''
        if which == 'i':
            g1, g2 = found['matching'], found['graph']
        else:
            g1, g2 = found['graph'], found['matching']
        lhs = _literal_pairs_count(self.h, g1, g2, which)
        rhs = Fraction(len(g1) * len(g2), scale)
        if lhs > rhs:
            raise InvariantViolationError(
                f'condition ({which}) witness does not re-evaluate'
            )
        witness = {'g1': g1, 'g2': g2, 'lhs': lhs, 'rhs': str(rhs)}
        return DensityStatus.VIOLATED, witness, ''

    # ---- условие (iii)

    def _inside_counts(self) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Для всех A_X ⊆ X: маски, размеры и e_y = |L_XX(y) внутри A_X|."""
        width = len(self.xs)
        for start in range(0, 1 << width, SUBSET_CHUNK):
            subs = np.arange(start, min(start + SUBSET_CHUNK, 1 << width), dtype=np.int64)
            counts = np.zeros((subs.size, len(self.ys)), dtype=np.int64)
            for j, pairs in enumerate(self.y_links):
                for u, v in pairs:
                    counts[:, j] += (subs >> u) & (subs >> v) & 1
            yield subs, np.bitwise_count(subs).astype(np.int64), counts

    def _x_of(self, sub: int) -> list[int]:
        return [self.xs[i] for i in iter_bits(sub)]

    def _inside(self, sub: int, j: int) -> int:
        return sum(sub >> u & sub >> v & 1 for u, v in self.y_links[j])

    def condition_iii(self, exact: bool) -> tuple[DensityStatus, dict | None, str]:
        k = self.at_least(self.mu * self.n)
        if len(self.xs) < k or len(self.ys) < k:
            return DensityStatus.HOLDS_EXACT, None, 'vacuous'
        found: tuple[int, list[int]] | None = None
        if exact:
            for subs, sizes, counts in self._inside_counts():
                values = 8 * counts - (sizes ** 2)[:, None]
                ordered = np.sort(values, axis=1)
                sums = np.cumsum(ordered, axis=1)[:, k - 1:]
                bad = (sizes >= k) & (sums.min(axis=1) <= 0)
                if bad.any():
                    row = int(np.flatnonzero(bad)[0])
                    take = k + int(np.argmin(sums[row]))
                    picks = np.argsort(values[row], kind='stable')[:take]
                    found = (int(subs[row]), [int(j) for j in picks])
                    break
        elif self.restarts:
            found = self._attack_iii(k)
        else:
            return DensityStatus.SKIPPED, None, 'no search restarts'
        if found is None:
            status = (
                DensityStatus.HOLDS_EXACT if exact
                else DensityStatus.HOLDS_UNREFUTED
            )
            return status, None, ''
        sub, picks = found
        a_x = self._x_of(sub)
        a_y = sorted(self.ys[j] for j in picks)
        lhs = _literal_iii_count(self.h, a_x, a_y)
        rhs = Fraction(len(a_x) ** 2 * len(a_y), 8)
        if lhs > rhs:
            raise InvariantViolationError('condition (iii) witness does not re-evaluate')
        return (
            DensityStatus.VIOLATED,
            {'a_x': a_x, 'a_y': a_y, 'lhs': lhs, 'rhs': str(rhs)},
            '',
        )

    def _attack_iii(self, k: int) -> tuple[int, list[int]] | None:
        width = len(self.xs)

        def slack(sub: int) -> tuple[int, list[int]]:
            size = sub.bit_count()
            if size < k:
                return math.inf, []
            values = [
                8 * self._inside(sub, j) - size * size
                for j in range(len(self.ys))
            ]
            return _min_selection(values, k)

        for _ in range(self.restarts):
            size = int(self.rng.integers(k, width + 1))
            sub = sum(1 << int(i) for i in self.rng.choice(width, size, replace=False))
            best, picks = slack(sub)
            improved = True
            while improved and best > 0:
                improved = False
                for i in range(width):
                    value, cand = slack(sub ^ 1 << i)
                    if value < best:
                        sub, best, picks = sub ^ 1 << i, value, cand
                        improved = True
            if best <= 0:
                return sub, picks
        return None

    # ---- условие (iv)

    def condition_iv(self, exact: bool) -> tuple[DensityStatus, dict | None, str]:
        n, mu = self.n, self.mu
        k_x = self.strictly_above(200 * mu * n)
        k_y = self.at_least(2 * mu * n)
        if len(self.xs) < k_x or len(self.ys) < k_y:
            return DensityStatus.HOLDS_EXACT, None, 'vacuous'
        limit = 10000 * mu ** 3 * n ** 3
        if exact:
            best = [None] * len(self.ys)
            for subs, sizes, counts in self._inside_counts():
                rows = np.flatnonzero(sizes == k_x)
                if rows.size == 0:
                    continue
                for j in range(len(self.ys)):
                    col = counts[rows, j]
                    r = int(np.argmin(col))
                    if best[j] is None or col[r] < best[j][0]:
                        best[j] = (int(col[r]), int(subs[rows[r]]))
        elif self.restarts:
            best = [self._attack_iv(j, k_x) for j in range(len(self.ys))]
        else:
            return DensityStatus.SKIPPED, None, 'no search restarts'
        order = sorted(range(len(self.ys)), key=lambda j: best[j][0])[:k_y]
        total = sum(best[j][0] for j in order)
        if total > limit:
            status = (
                DensityStatus.HOLDS_EXACT if exact
                else DensityStatus.HOLDS_UNREFUTED
            )
            return status, None, ''
        x_sets = {self.ys[j]: self._x_of(best[j][1]) for j in order}
        lhs = _literal_iv_count(self.h, x_sets)
        if lhs > limit:
            raise InvariantViolationError('condition (iv) witness does not re-evaluate')
        witness = {
            'x_sets': {str(y): xs for y, xs in sorted(x_sets.items())},
            'lhs': lhs,
            'rhs': str(limit),
        }
        return DensityStatus.VIOLATED, witness, ''

    def _attack_iv(self, j: int, k_x: int) -> tuple[int, int]:
        width = len(self.xs)
        best: tuple[int, int] | None = None
        for _ in range(max(1, self.restarts)):
            chosen = [int(i) for i in self.rng.choice(width, k_x, replace=False)]
            sub = sum(1 << i for i in chosen)
            value = self._inside(sub, j)
            improved = True
            while improved and value > 0:
                improved = False
                for out in iter_bits(sub):
                    for into in range(width):
                        if sub >> into & 1:
                            continue
                        cand = sub ^ (1 << out) ^ (1 << into)
                        cand_value = self._inside(cand, j)
                        if cand_value < value:
                            sub, value, improved = cand, cand_value, True
                            break
                    if improved:
                        break
            if best is None or value < best[0]:
                best = (value, sub)
        return best


def _literal_pairs_count(
    h: TripleSystem,
    g1: list[list[int]],
    g2: list[list[int]],
    which: str,
) -> int:
    """Число пар (ab ∈ G2, uv ∈ G1) из условия (i) или (ii) по определению."""
    count = 0
    for a, b in g2:
        for u, v in g1:
            if which == 'i':
                triples = ((a, b, u), (a, b, v))
            else:
                triples = ((a, u, v), (b, u, v))
            if all(len(set(t)) == 3 and h.has_edge(*t) for t in triples):
                count += 1
    return count


def _literal_iii_count(h: TripleSystem, a_x: list[int], a_y: list[int]) -> int:
    sx, sy = set(a_x), set(a_y)
    return sum(
        1 for e in h.triples()
        if len(sx.intersection(e)) == 2 and len(sy.intersection(e)) == 1
    )


def _literal_iv_count(h: TripleSystem, x_sets: dict[int, list[int]]) -> int:
    return sum(
        1 for e in h.triples()
        if any(y in e and len(set(xs).intersection(e)) == 2
               for y, xs in x_sets.items())
    )


def lower_density_check(
    h: TripleSystem,
    p: OrderedPartition,
    mu: float,
    effort: str = 'exact',
    *,
    seed: int = DEFAULT_SEED,
    restarts: int = DEFAULT_RESTARTS,
    exact_limit: int = EXACT_SIDE_LIMIT,
) -> LowerDensityReport:
    """Проверяет пять условий нижней плотности разбиения (X, Y).

    Условие (v) всегда точное. Условия (iii), (iv) в режиме exact
    перебирают все подмножества X (при |X|, |Y| <= exact_limit), иначе
    ищутся свидетели нарушения. Условия (i), (ii) только атакуются
    случайными рестартами с жадным спуском, кроме пустых случаев.
    Каждый найденный свидетель пересчитывается по буквальному
    неравенству.

    Raises:
        InvalidArgumentError: mu вне (0, 1), неизвестный effort, разные n.
    """
    if not 0 < mu < 1:
        raise InvalidArgumentError(f'mu must be in (0, 1), got {mu}')
    if effort not in ('exact', 'adversarial'):
        raise InvalidArgumentError(f'unknown effort {effort!r}')
    if h.n != p.n:
        raise InvalidArgumentError('system and partition differ in n')
    state = _LowerDensity(h, p, mu, np.random.default_rng(seed), restarts)
    exact = effort == 'exact'
    downgraded: tuple[str, ...] = ()
    if exact and max(len(state.xs), len(state.ys)) > exact_limit:
        exact = False
        downgraded = ('iii', 'iv')
        logger.info(
            'Lower-density check: sides %d/%d exceed %d, using search',
            len(state.xs),
            len(state.ys),
            exact_limit,
        )

    statuses: dict[str, DensityStatus] = {}
    witnesses: dict[str, dict] = {}
    notes: dict[str, str] = {}
    results = {
        'i': state.condition_matching('i'),
        'ii': state.condition_matching('ii'),
        'iii': state.condition_iii(exact),
        'iv': state.condition_iv(exact),
        'v': (state.condition_v(), None, ''),
    }
    for name, (status, witness, note) in results.items():
        statuses[name] = status
        if witness is not None:
            witnesses[name] = witness
        if note:
            notes[name] = note
    for name in downgraded:
        notes[name] = (notes.get(name, '') + ' downgraded to search').strip()
    return LowerDensityReport(
        mu=mu,
        statuses=statuses,
        witnesses=witnesses,
        notes=notes,
        downgraded=downgraded,
    )


@dataclass(frozen=True)
class SBoundReport:
    """Нижние оценки числа семидвудольных систем S(n).

    Attributes:
        bound: (2/27)n^3 - n^2/9 - n/9 (оценка на log2 S(n)).
        construction_log2: C(a,2)(n-a) при a = ceil(2n/3).
        exact_holds: log2 S(n) >= bound по переданному S(n) или None.
        recursion_holds: S(n) >= S(n-1) 2^((2n^2-5n+1)/9) или None.
    """
    n: int
    bound: Fraction
    construction_log2: int
    exact_holds: Optional[bool]
    recursion_holds: Optional[bool]

    @property
    def construction_holds(self) -> bool:
        return self.construction_log2 >= self.bound


def _log2_at_least(value: int, bound: Fraction) -> bool:
    """log2 value >= bound без плавающей точки: value^q >= 2^p."""
    if bound <= 0:
        return value >= 1
    return value ** bound.denominator >= 1 << bound.numerator


def s_bound_check(
    n: int,
    exact_s: Optional[int] = None,
    exact_s_prev: Optional[int] = None,
) -> SBoundReport:
    if n < 3:
        raise InvalidArgumentError(f'n must be >= 3, got {n}')
    bound = Fraction(2, 27) * n ** 3 - Fraction(n * n, 9) - Fraction(n, 9)
    a = ceil(Fraction(2 * n, 3))
    recursion = None
    if exact_s is not None and exact_s_prev is not None:
        exponent = 2 * n * n - 5 * n + 1
        recursion = exact_s ** 9 >= exact_s_prev ** 9 * (1 << exponent)
    return SBoundReport(
        n=n,
        bound=bound,
        construction_log2=comb(a, 2) * (n - a),
        exact_holds=None if exact_s is None else _log2_at_least(exact_s, bound),
        recursion_holds=recursion,
    )


@dataclass(frozen=True)
class HierarchyReport:
    checks: dict[str, bool]

    @property
    def holds(self) -> bool:
        return all(self.checks.values())


def threshold_hierarchy_check(t: Thresholds) -> HierarchyReport:
    """Четыре неравенства иерархии порогов, вычисленные в mpmath."""
    with mpmath.workdps(MP_DPS):
        eta, mu, alpha, beta = (
            _mp_value(_fraction(v)) for v in (t.eta, t.mu, t.alpha, t.beta)
        )

        def entropy(x: mpmath.mpf) -> mpmath.mpf | None:
            return _entropy_mp(x) if 0 < x < 1 else None

        h_2mu = entropy(2 * mu)
        checks = {
            'entropy_alpha': entropy(alpha) < mpmath.mpf('0.01'),
            'alpha_squared': h_2mu is not None
            and alpha ** 2 > 100 * (entropy(beta) + h_2mu + mu ** 2),
            'beta': h_2mu is not None and beta > 100 * h_2mu,
            'mu_cubed': mu ** 3 >= 1000 * entropy(eta),
        }
    return HierarchyReport({k: bool(v) for k, v in checks.items()})

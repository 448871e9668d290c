from __future__ import annotations

import logging
from dataclasses import dataclass
from math import comb

import numpy as np

from .detection import has_independent_neighborhoods, is_semibipartite
from .errors import InvalidArgumentError, InvariantViolationError
from .hypergraph import (
    OrderedPartition,
    TripleSystem,
    all_triples,
    triple_index,
    triples_by_x_count,
)

NS_VERIFY_BELOW = 14

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Thresholds:
    """Параметры eta, mu, alpha, beta для проверок условий."""
    eta: float
    mu: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        for name in ('eta', 'mu', 'alpha', 'beta'):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise InvalidArgumentError(
                    f'{name} must be in (0, 1), got {value}'
                )


# Набор, удовлетворяющий иерархии параметров (см. bounds.threshold_hierarchy_check).
DEFAULT_THRESHOLDS = Thresholds(eta=1e-49, mu=5e-15, alpha=8e-4, beta=1e-10)


@dataclass(frozen=True)
class B3Value:
    value: int
    a: int


def b3(n: int) -> B3Value:
    """b3(n) = max_a C(a,2)(n-a) и наименьший максимизирующий a."""
    if n < 3:
        raise InvalidArgumentError(f'b3 needs n >= 3, got {n}')
    best = B3Value(-1, 0)
    for a in range(2, n):
        value = comb(a, 2) * (n - a)
        if value > best.value:
            best = B3Value(value, a)
    return best


def _consistent_mask(n: int, a: int) -> int:
    """Все тройки ровно с двумя точками в X = {0..a-1}."""
    return triples_by_x_count(n, (1 << a) - 1)[2]


def build_b3(n: int) -> tuple[TripleSystem, OrderedPartition]:
    """Строит B3(n): все согласованные тройки для X = {0..a-1}."""
    a = b3(n).a
    return (
        TripleSystem(n, _consistent_mask(n, a)),
        OrderedPartition(n, (1 << a) - 1),
    )


@dataclass(frozen=True)
class NsFamilyBase:
    """База семейства F ∪ G′ несемидвудольных систем без T5.

    Attributes:
        n: Число вершин.
        t: Размер X = {0..t-1}.
        special: Особое 4-множество {0, 1, n-2, n-1}.
        f_edges: Маска четырёх троек внутри особого множества.
        g_edges: Ранги троек свободного пула G (колекс-порядок).
        s: C(t,2)(n-t).
    """
    n: int
    t: int
    special: tuple[int, int, int, int]
    f_edges: int
    g_edges: tuple[int, ...]
    s: int

    @property
    def g_mask(self) -> int:
        mask = 0
        for idx in self.g_edges:
            mask |= 1 << idx
        return mask

    @property
    def excluded(self) -> int:
        """Согласованные тройки, отброшенные из-за особого множества."""
        return (self.n - self.t) + 4 * (self.t - 2)

    @property
    def stated_lower_bound(self) -> int:
        """s - (n-t+4(t-2)+2): гарантированная нижняя оценка размера пула."""
        return self.s - (self.excluded + 2)

    @property
    def log2_size(self) -> int:
        """log2 размера семейства: каждый G′ ⊆ G даёт свою систему."""
        return len(self.g_edges)

    def chain_holds(self) -> bool:
        """2^|G| >= 2^(-4n) * 2^(n+s), т.е. |G| >= s - 3n."""
        return len(self.g_edges) >= self.s - 3 * self.n


def _ns_t(n: int) -> int:
    best_t, best = 0, -1
    for t in range(2, n):
        if t < n - t:
            continue
        value = comb(t, 2) * (n - t)
        if value > best:
            best_t, best = t, value
    return best_t


def ns_family_base(n: int) -> NsFamilyBase:
    """Собирает особое множество, F и пул G для n >= 9.

    t выбирается как наименьший argmax C(t,2)(n-t) при t >= n-t. Пул G —
    тройки ровно с двумя точками в X и не более чем одной точкой
    особого множества.
    """
    if n < 9:
        raise InvalidArgumentError(f'family needs n >= 9, got {n}')
    t = _ns_t(n)
    special = (0, 1, n - 2, n - 1)
    special_mask = sum(1 << v for v in special)
    f_edges = 0
    for a, b, c in ((0, 1, n - 2), (0, 1, n - 1), (0, n - 2, n - 1),
                    (1, n - 2, n - 1)):
        f_edges |= 1 << triple_index(a, b, c, n)
    pool = _consistent_mask(n, t)
    g = tuple(
        idx for idx, triple in enumerate(all_triples(n))
        if pool >> idx & 1
        and sum(special_mask >> v & 1 for v in triple) <= 1
    )
    base = NsFamilyBase(
        n=n,
        t=t,
        special=special,
        f_edges=f_edges,
        g_edges=g,
        s=comb(t, 2) * (n - t),
    )
    if len(g) != base.s - base.excluded:
        raise InvariantViolationError(
            f'pool size {len(g)} != s - excluded = {base.s - base.excluded}'
        )
    return base


def ns_sample(
    base: NsFamilyBase,
    seed: int | None = None,
    *,
    subset: int | None = None,
    verify: bool | None = None,
) -> TripleSystem:
    """Возвращает F ∪ G′ для случайного (по seed) или явного G′.

    Args:
        base: База семейства.
        seed: Зерно генератора; каждый элемент пула берётся с вер. 1/2.
        subset: Явная маска длины |G| (бит i — элемент g_edges[i]).
        verify: Перепроверять отсутствие T5 и несемидвудольность.
            По умолчанию включено при n < 14.

    Raises:
        InvalidArgumentError: Маска длиннее пула.
        InvariantViolationError: Перепроверка не прошла.
    """
    size = len(base.g_edges)
    if subset is None:
        rng = np.random.default_rng(seed)
        picks = rng.integers(0, 2, size=size)
        chosen = [idx for idx, bit in zip(base.g_edges, picks) if bit]
    else:
        if subset < 0 or subset >> size:
            raise InvalidArgumentError(
                f'subset mask must fit in {size} bits'
            )
        chosen = [
            idx for i, idx in enumerate(base.g_edges) if subset >> i & 1
        ]
    mask = base.f_edges
    for idx in chosen:
        mask |= 1 << idx
    h = TripleSystem(base.n, mask)
    if verify is None:
        verify = base.n < NS_VERIFY_BELOW
    if verify:
        if not has_independent_neighborhoods(h):
            raise InvariantViolationError(f'sample contains T5: {h.to_hex_text()}')
        if is_semibipartite(h, cap=max(base.n, 24)) is not None:
            raise InvariantViolationError(
                f'sample is semi-bipartite: {h.to_hex_text()}'
            )
    return h


def random_semibipartite(
    n: int,
    a: int,
    p: float,
    seed: int | None = None,
) -> TripleSystem:
    """Каждая согласованная тройка для X = {0..a-1} берётся с вер. p."""
    if not 2 <= a <= n - 1:
        raise InvalidArgumentError(f'a must be in [2, n-1], got {a}')
    if not 0 <= p <= 1:
        raise InvalidArgumentError(f'p must be in [0, 1], got {p}')
    pool = _consistent_mask(n, a)
    return TripleSystem(n, _sample_mask(pool, comb(n, 3), p, seed))


def random_triple_system(
    n: int,
    p: float,
    seed: int | None = None,
) -> TripleSystem:
    """Каждая из C(n,3) троек берётся независимо с вероятностью p."""
    if n < 3:
        raise InvalidArgumentError(f'random triple system needs n >= 3, got {n}')
    if not 0 <= p <= 1:
        raise InvalidArgumentError(f'p must be in [0, 1], got {p}')
    total = comb(n, 3)
    return TripleSystem(n, _sample_mask((1 << total) - 1, total, p, seed))


def _sample_mask(pool: int, width: int, p: float, seed: int | None) -> int:
    rng = np.random.default_rng(seed)
    draws = rng.random(width)
    mask = 0
    for idx in np.flatnonzero(draws < p):
        idx = int(idx)
        if pool >> idx & 1:
            mask |= 1 << idx
    return mask

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, Sequence

from .errors import InvalidArgumentError

MIN_VERTICES = 3
MAX_VERTICES = 64
WORD_BITS = 64


def iter_bits(mask: int) -> Iterator[int]:
    """Перебирает номера установленных битов маски по возрастанию."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def vertex_mask(vertices: Iterable[int]) -> int:
    """Собирает битовую маску из набора вершин."""
    mask = 0
    for v in vertices:
        mask |= 1 << v
    return mask


def vertices_of(mask: int) -> frozenset[int]:
    """Возвращает множество вершин, закодированных маской."""
    return frozenset(iter_bits(mask))


def _check_n(n: int, *, minimum: int = MIN_VERTICES) -> None:
    if not minimum <= n <= MAX_VERTICES:
        raise InvalidArgumentError(
            f'vertex count must be in [{minimum}, {MAX_VERTICES}], got {n}'
        )


def _check_vertex(v: int, n: int) -> None:
    if not 0 <= v < n:
        raise InvalidArgumentError(f'vertex {v} is outside [0, {n})')


def pair_index(a: int, b: int, n: int) -> int:
    """Колекс-ранг пары {a, b} среди всех C(n,2) пар.

    Args:
        a: Первая вершина.
        b: Вторая вершина.
        n: Число вершин.

    Returns:
        int: Ранг в [0, C(n,2)).

    Raises:
        InvalidArgumentError: Вершины совпадают или выходят за [0, n).
    """
    _check_vertex(a, n)
    _check_vertex(b, n)
    if a == b:
        raise InvalidArgumentError(f'pair needs distinct vertices, got {a}')
    if a > b:
        a, b = b, a
    return comb(b, 2) + a


def triple_index(a: int, b: int, c: int, n: int) -> int:
    """Колекс-ранг тройки {a, b, c}.

    Тройки a<b<c упорядочены по (c, b, a), поэтому ранг равен
    C(c,3) + C(b,2) + a и не зависит от n: при росте n старые ранги
    сохраняются.

    Args:
        a: Вершина тройки.
        b: Вершина тройки.
        c: Вершина тройки.
        n: Число вершин.

    Returns:
        int: Ранг в [0, C(n,3)).

    Raises:
        InvalidArgumentError: Вершины не различны или >= n.
    """
    for v in (a, b, c):
        _check_vertex(v, n)
    if len({a, b, c}) != 3:
        raise InvalidArgumentError(
            f'triple needs distinct vertices, got {(a, b, c)}'
        )
    a, b, c = sorted((a, b, c))
    return comb(c, 3) + comb(b, 2) + a


@lru_cache(maxsize=None)
def all_triples(n: int) -> tuple[tuple[int, int, int], ...]:
    """Все тройки на {0..n-1} в колекс-порядке (позиция = ранг)."""
    return tuple(
        (a, b, c)
        for c in range(n)
        for b in range(c)
        for a in range(b)
    )


@lru_cache(maxsize=None)
def all_pairs(n: int) -> tuple[tuple[int, int], ...]:
    """Все пары на {0..n-1} в колекс-порядке."""
    return tuple((a, b) for b in range(n) for a in range(b))


def triple_from_index(index: int, n: int) -> tuple[int, int, int]:
    """Обратное к triple_index: тройка по её рангу."""
    if not 0 <= index < comb(n, 3):
        raise InvalidArgumentError(
            f'triple index {index} is outside [0, {comb(n, 3)})'
        )
    return all_triples(n)[index]


def pair_from_index(index: int, n: int) -> tuple[int, int]:
    """Обратное к pair_index."""
    if not 0 <= index < comb(n, 2):
        raise InvalidArgumentError(
            f'pair index {index} is outside [0, {comb(n, 2)})'
        )
    return all_pairs(n)[index]


@lru_cache(maxsize=None)
def vertex_triple_masks(n: int) -> tuple[int, ...]:
    """Для каждой вершины — маска троек, которые её содержат."""
    masks = [0] * n
    for idx, (a, b, c) in enumerate(all_triples(n)):
        bit = 1 << idx
        masks[a] |= bit
        masks[b] |= bit
        masks[c] |= bit
    return tuple(masks)


@lru_cache(maxsize=None)
def pair_completions(n: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Для каждой пары (по рангу) — список (w, ранг тройки {u,v,w})."""
    out: list[list[tuple[int, int]]] = [[] for _ in range(comb(n, 2))]
    for idx, (a, b, c) in enumerate(all_triples(n)):
        out[comb(b, 2) + a].append((c, idx))
        out[comb(c, 2) + a].append((b, idx))
        out[comb(c, 2) + b].append((a, idx))
    return tuple(tuple(sorted(items)) for items in out)


def full_triple_mask(n: int) -> int:
    return (1 << comb(n, 3)) - 1


def inside_mask(n: int, vmask: int) -> int:
    """Маска троек, целиком лежащих во множестве вершин vmask."""
    outside = 0
    vt = vertex_triple_masks(n)
    for v in range(n):
        if not vmask >> v & 1:
            outside |= vt[v]
    return full_triple_mask(n) & ~outside


def pair_triples_mask(n: int, u: int, v: int) -> int:
    """Маска троек, содержащих пару {u, v}."""
    vt = vertex_triple_masks(n)
    return vt[u] & vt[v]


@lru_cache(maxsize=4096)
def triples_by_x_count(n: int, x_mask: int) -> tuple[int, int, int, int]:
    """Разбивает все тройки по числу точек в X.

    Returns:
        tuple[int, int, int, int]: Маски троек с 0, 1, 2 и 3 точками в X.
    """
    masks = [0, 0, 0, 0]
    for idx, (a, b, c) in enumerate(all_triples(n)):
        k = (x_mask >> a & 1) + (x_mask >> b & 1) + (x_mask >> c & 1)
        masks[k] |= 1 << idx
    return masks[0], masks[1], masks[2], masks[3]


def _words_hex(mask: int, bits: int) -> str:
    words = max(1, -(-bits // WORD_BITS))
    word_mask = (1 << WORD_BITS) - 1
    return ''.join(
        f'{(mask >> (WORD_BITS * i)) & word_mask:016x}'
        for i in range(words)
    )


def _hex_words(text: str) -> int:
    if len(text) % 16:
        raise InvalidArgumentError(
            'edge mask hex must consist of 16-digit words'
        )
    mask = 0
    for i in range(len(text) // 16):
        chunk = text[16 * i:16 * (i + 1)]
        try:
            mask |= int(chunk, 16) << (WORD_BITS * i)
        except ValueError as exc:
            raise InvalidArgumentError(f'bad hex word {chunk!r}') from exc
    return mask


def _parse_fields(text: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for part in text.strip().split(';'):
        if not part.strip():
            continue
        key, sep, value = part.partition('=')
        if not sep:
            raise InvalidArgumentError(f'malformed field {part!r}')
        fields[key.strip()] = value.strip()
    if 'n' not in fields:
        raise InvalidArgumentError('serialized value lacks the n= field')
    try:
        int(fields['n'])
    except ValueError as exc:
        raise InvalidArgumentError(f'bad vertex count {fields["n"]!r}') from exc
    return fields


@dataclass(frozen=True)
class TripleSystem:
    """Помеченная тройковая система (3-граф) на вершинах {0..n-1}.

    Рёбра хранятся одной целочисленной маской над всеми C(n,3) тройками
    в колекс-порядке: бит i установлен, если тройка с рангом i — ребро.

    Attributes:
        n: Число вершин, 3 <= n <= 64.
        edges: Маска рёбер.
    """
    n: int
    edges: int = 0

    def __post_init__(self) -> None:
        _check_n(self.n)
        if self.edges < 0 or self.edges >> comb(self.n, 3):
            raise InvalidArgumentError(
                f'edge mask has bits outside [0, C({self.n},3))'
            )

    @classmethod
    def from_triples(
        cls,
        n: int,
        triples: Iterable[Sequence[int]],
    ) -> TripleSystem:
        mask = 0
        for t in triples:
            a, b, c = t
            mask |= 1 << triple_index(a, b, c, n)
        return cls(n, mask)

    @classmethod
    def complete(cls, n: int) -> TripleSystem:
        return cls(n, full_triple_mask(n))

    @property
    def edge_count(self) -> int:
        return self.edges.bit_count()

    def __len__(self) -> int:
        return self.edge_count

    def has_edge(self, a: int, b: int, c: int) -> bool:
        return bool(self.edges >> triple_index(a, b, c, self.n) & 1)

    def edge_indices(self) -> Iterator[int]:
        return iter_bits(self.edges)

    def triples(self) -> list[tuple[int, int, int]]:
        table = all_triples(self.n)
        return [table[i] for i in iter_bits(self.edges)]

    def with_edges(self, mask: int) -> TripleSystem:
        return TripleSystem(self.n, self.edges | mask)

    def without_edges(self, mask: int) -> TripleSystem:
        return TripleSystem(self.n, self.edges & ~mask)

    def is_subsystem_of(self, other: TripleSystem) -> bool:
        return self.n == other.n and not self.edges & ~other.edges

    def to_hex_text(self) -> str:
        """Однострочная форма `n=<n>;edges=<hex>` (слова little-endian)."""
        return f'n={self.n};edges={_words_hex(self.edges, comb(self.n, 3))}'

    def to_list_text(self) -> str:
        """Читаемая форма `n=<n>;triples=a-b-c,...` в колекс-порядке."""
        body = ','.join(f'{a}-{b}-{c}' for a, b, c in self.triples())
        return f'n={self.n};triples={body}'

    @classmethod
    def parse(cls, text: str) -> TripleSystem:
        """Разбирает обе текстовые формы (hex и список троек).

        Raises:
            InvalidArgumentError: Строка не соответствует ни одной форме.
        """
        fields = _parse_fields(text)
        n = int(fields['n'])
        _check_n(n)
        if 'edges' in fields:
            return cls(n, _hex_words(fields['edges']))
        if 'triples' in fields:
            body = fields['triples']
            triples = []
            for item in filter(None, body.split(',')):
                parts = item.strip().split('-')
                if len(parts) != 3:
                    raise InvalidArgumentError(f'malformed triple {item!r}')
                try:
                    triples.append(tuple(int(p) for p in parts))
                except ValueError as exc:
                    raise InvalidArgumentError(
                        f'malformed triple {item!r}'
                    ) from exc
            return cls.from_triples(n, triples)
        raise InvalidArgumentError('expected an edges= or triples= field')


@dataclass(frozen=True)
class OrderedPartition:
    """Упорядоченное разбиение (X, Y); хранится маска X, Y — дополнение."""
    n: int
    x_mask: int

    def __post_init__(self) -> None:
        _check_n(self.n, minimum=1)
        if self.x_mask < 0 or self.x_mask >> self.n:
            raise InvalidArgumentError('x_mask has bits outside [0, n)')

    @classmethod
    def from_x(cls, n: int, xs: Iterable[int]) -> OrderedPartition:
        xs = list(xs)
        for v in xs:
            _check_vertex(v, n)
        return cls(n, vertex_mask(xs))

    @property
    def y_mask(self) -> int:
        return ((1 << self.n) - 1) & ~self.x_mask

    @property
    def x(self) -> frozenset[int]:
        return vertices_of(self.x_mask)

    @property
    def y(self) -> frozenset[int]:
        return vertices_of(self.y_mask)

    def in_x(self, v: int) -> bool:
        return bool(self.x_mask >> v & 1)

    def to_text(self) -> str:
        return f'n={self.n};X={",".join(str(v) for v in sorted(self.x))}'

    @classmethod
    def parse(cls, text: str) -> OrderedPartition:
        fields = _parse_fields(text)
        body = fields.get('X', '')
        try:
            xs = [int(v) for v in filter(None, body.split(','))]
        except ValueError as exc:
            raise InvalidArgumentError(f'malformed X list {body!r}') from exc
        return cls.from_x(int(fields['n']), xs)


@dataclass(frozen=True)
class PairGraph:
    """Множество неупорядоченных пар на {0..n-1} (маска в колекс-порядке).

    Используется для графов связей, теневого графа и паросочетаний.
    """
    n: int
    pairs: int = 0

    def __post_init__(self) -> None:
        _check_n(self.n, minimum=1)
        if self.pairs < 0 or self.pairs >> comb(self.n, 2):
            raise InvalidArgumentError('pair mask has bits outside C(n,2)')

    @classmethod
    def from_pairs(
        cls,
        n: int,
        pairs: Iterable[Sequence[int]],
    ) -> PairGraph:
        mask = 0
        for a, b in pairs:
            mask |= 1 << pair_index(a, b, n)
        return cls(n, mask)

    @property
    def size(self) -> int:
        return self.pairs.bit_count()

    def __len__(self) -> int:
        return self.size

    def has_pair(self, a: int, b: int) -> bool:
        return bool(self.pairs >> pair_index(a, b, self.n) & 1)

    def edge_list(self) -> list[tuple[int, int]]:
        table = all_pairs(self.n)
        return [table[i] for i in iter_bits(self.pairs)]

    def __or__(self, other: PairGraph) -> PairGraph:
        if other.n != self.n:
            raise InvalidArgumentError('pair graphs on different n')
        return PairGraph(self.n, self.pairs | other.pairs)

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edge_list())
        return g


class LinkSides(str, Enum):
    """Расположение двух оставшихся вершин ребра относительно (X, Y)."""
    XX = 'XX'
    XY = 'XY'
    YY = 'YY'


@dataclass(frozen=True)
class EdgeClassification:
    """Согласованные и несогласованные рёбра относительно разбиения.

    Attributes:
        consistent: Маска рёбер ровно с двумя точками в X.
        inconsistent: Маска остальных рёбер (множество D_P).
    """
    consistent: int
    inconsistent: int

    @property
    def d_p(self) -> int:
        return self.inconsistent.bit_count()

    @property
    def inconsistent_indices(self) -> frozenset[int]:
        return vertices_of(self.inconsistent)

    @property
    def consistent_indices(self) -> frozenset[int]:
        return vertices_of(self.consistent)


def _same_n(h: TripleSystem, p: OrderedPartition) -> None:
    if h.n != p.n:
        raise InvalidArgumentError(
            f'system has n={h.n} but partition has n={p.n}'
        )


def neighborhood_mask(h: TripleSystem, u: int, v: int) -> int:
    """Маска соседства N(u,v) = {w : uvw — ребро}."""
    p = pair_index(u, v, h.n)
    edges = h.edges
    mask = 0
    for w, t in pair_completions(h.n)[p]:
        if edges >> t & 1:
            mask |= 1 << w
    return mask


def neighborhood(h: TripleSystem, u: int, v: int) -> frozenset[int]:
    """Соседство пары: все w, для которых {u, v, w} — ребро.

    Raises:
        InvalidArgumentError: u == v или вершина вне [0, n).
    """
    return vertices_of(neighborhood_mask(h, u, v))


def classify_edges(
    h: TripleSystem,
    p: OrderedPartition,
) -> EdgeClassification:
    """Делит рёбра на согласованные (|e ∩ X| = 2) и несогласованные.

    Вырожденные разбиения допустимы: при |X| < 2 все рёбра несогласованны.
    """
    _same_n(h, p)
    exactly_two = triples_by_x_count(h.n, p.x_mask)[2]
    return EdgeClassification(
        consistent=h.edges & exactly_two,
        inconsistent=h.edges & ~exactly_two,
    )


def link(
    h: TripleSystem,
    x: int,
    p: OrderedPartition,
    sides: LinkSides | str,
) -> PairGraph:
    """Граф связей вершины x с концами на заданных сторонах разбиения.

    Возвращает пары {u, v}, для которых {x, u, v} — ребро, а u и v лежат
    соответственно в X,X / X,Y / Y,Y.
    """
    _same_n(h, p)
    _check_vertex(x, h.n)
    sides = LinkSides(sides)
    want = {LinkSides.XX: 2, LinkSides.XY: 1, LinkSides.YY: 0}[sides]
    table = all_triples(h.n)
    out = 0
    for idx in iter_bits(h.edges & vertex_triple_masks(h.n)[x]):
        u, v = (w for w in table[idx] if w != x)
        if (p.x_mask >> u & 1) + (p.x_mask >> v & 1) == want:
            out |= 1 << (comb(v, 2) + u)
    return PairGraph(h.n, out)


def pair_link_restricted(
    h: TripleSystem,
    u: int,
    v: int,
    a: Iterable[int],
) -> frozenset[int]:
    """L_A({u,v}): соседи пары, лежащие в A."""
    a = tuple(a)
    for w in a:
        _check_vertex(w, h.n)
    return vertices_of(neighborhood_mask(h, u, v) & vertex_mask(a))


def shadow_graph(h: TripleSystem, p: OrderedPartition) -> PairGraph:
    """Теневой граф: объединение графов связей L_{X,Y}(y) по всем y ∈ Y."""
    _same_n(h, p)
    out = PairGraph(h.n)
    for y in iter_bits(p.y_mask):
        out = out | link(h, y, p, LinkSides.XY)
    return out


def relabel(h: TripleSystem, permutation: Sequence[int]) -> TripleSystem:
    """Переименовывает вершины: v -> permutation[v]."""
    if sorted(permutation) != list(range(h.n)):
        raise InvalidArgumentError('relabeling must be a permutation of [0, n)')
    return TripleSystem.from_triples(
        h.n,
        ((permutation[a], permutation[b], permutation[c])
         for a, b, c in h.triples()),
    )


def relabel_partition(
    p: OrderedPartition,
    permutation: Sequence[int],
) -> OrderedPartition:
    return OrderedPartition.from_x(p.n, (permutation[v] for v in p.x))

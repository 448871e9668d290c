from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from pathlib import Path
from typing import Optional

from tqdm import tqdm

from . import ARTIFACT_VERSION
from .constructions import build_b3
from .errors import (
    CacheChecksumError,
    InvalidArgumentError,
    InvariantViolationError,
    ResourceLimitError,
)
from .hypergraph import (
    TripleSystem,
    all_pairs,
    all_triples,
    inside_mask,
    pair_completions,
    triple_index,
    triples_by_x_count,
    vertex_triple_masks,
)

CENSUS_MAX_N = 6
DEEP_MAX_N = 7
CHECKPOINT_EVERY = 1 << 30
CHUNKS_PER_WORKER = 4

COUNT_FIELDS = (
    'n',
    'total',
    'i_n',
    's_n',
    't5_free',
    'extra',
    'max_t5_free_edges',
)


def counts_checksum(counts: dict) -> str:
    """SHA-256 от канонического JSON счётчиков."""
    payload = json.dumps(
        {k: counts[k] for k in sorted(counts)},
        sort_keys=True,
        separators=(',', ':'),
    )
    return hashlib.sha256(payload.encode('ascii')).hexdigest()


@dataclass(frozen=True)
class CensusReport:
    """Точные счётчики одного полного перебора систем на n вершинах.

    Attributes:
        n: Число вершин.
        total: 2^C(n,3).
        i_n: Системы с независимыми соседствами.
        s_n: Семидвудольные системы.
        t5_free: Системы без T5 (совпадает с i_n).
        max_t5_free_edges: Наибольшее число рёбер у системы без T5.
        elapsed: Время перебора, секунды.
        workers: Число процессов.
        version: Версия артефакта.
    """
    n: int
    total: int
    i_n: int
    s_n: int
    t5_free: int
    max_t5_free_edges: int
    elapsed: float = 0.0
    workers: int = 1
    version: str = ARTIFACT_VERSION

    @property
    def extra(self) -> int:
        return self.i_n - self.s_n

    def counts(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in COUNT_FIELDS}

    def to_record(self, *, include_provenance: bool = False) -> dict:
        record: dict = dict(self.counts())
        record['version'] = self.version
        if include_provenance:
            record['elapsed'] = round(self.elapsed, 3)
            record['workers'] = self.workers
        return record

    @classmethod
    def from_record(cls, record: dict) -> CensusReport:
        return cls(
            n=record['n'],
            total=record['total'],
            i_n=record['i_n'],
            s_n=record['s_n'],
            t5_free=record['t5_free'],
            max_t5_free_edges=record['max_t5_free_edges'],
            elapsed=record.get('elapsed', 0.0),
            workers=record.get('workers', 1),
            version=record.get('version', ARTIFACT_VERSION),
        )


@dataclass(frozen=True)
class _SweepTables:
    pair_rows: tuple[tuple[tuple[int, int], ...], ...]
    inside: tuple[int, ...]
    t5_masks: tuple[int, ...]
    inconsistent: tuple[int, ...]


@lru_cache(maxsize=None)
def _tables(n: int) -> _SweepTables:
    """Предвычисленные маски для быстрого перебора при малых n."""
    pair_rows = tuple(
        tuple((1 << w, 1 << t) for w, t in row)
        for row in pair_completions(n)
    )
    inside = tuple(inside_mask(n, s) for s in range(1 << n))
    t5: list[int] = []
    for a, b, c in all_triples(n):
        base = 1 << triple_index(a, b, c, n)
        for u, v in all_pairs(n):
            if {u, v} & {a, b, c}:
                continue
            mask = base
            for w in (a, b, c):
                mask |= 1 << triple_index(u, v, w, n)
            t5.append(mask)
    full = (1 << comb(n, 3)) - 1
    inconsistent = {
        full & ~triples_by_x_count(n, x)[2] for x in range(1 << n)
    }
    return _SweepTables(
        pair_rows=pair_rows,
        inside=inside,
        t5_masks=tuple(t5),
        inconsistent=tuple(sorted(inconsistent, key=int.bit_count)),
    )


def _sweep_range(n: int, start: int, stop: int) -> tuple[int, int, int, int]:
    """Считает (i_n, s_n, t5_free, max рёбер без T5) на [start, stop).

    Оба признака (независимые соседства и отсутствие T5) вычисляются
    разными способами и сверяются на каждой маске.
    """
    tables = _tables(n)
    pair_rows = tables.pair_rows
    inside = tables.inside
    t5_masks = tables.t5_masks
    inconsistent = tables.inconsistent
    i_n = s_n = t5_free = 0
    max_edges = -1
    for mask in range(start, stop):
        indep = True
        for row in pair_rows:
            nb = 0
            for w_bit, t_bit in row:
                if mask & t_bit:
                    nb |= w_bit
            if mask & inside[nb]:
                indep = False
                break
        has_t5 = False
        for m in t5_masks:
            if mask & m == m:
                has_t5 = True
                break
        if indep == has_t5:
            raise InvariantViolationError(
                f'independent neighborhoods and T5-freeness disagree '
                f'on mask {mask:#x} (n={n})'
            )
        semi = False
        for m in inconsistent:
            if not mask & m:
                semi = True
                break
        if semi and not indep:
            raise InvariantViolationError(
                f'semi-bipartite mask {mask:#x} has a dependent neighborhood'
            )
        if indep:
            i_n += 1
            edges = mask.bit_count()
            if edges > max_edges:
                max_edges = edges
        if not has_t5:
            t5_free += 1
        if semi:
            s_n += 1
    return i_n, s_n, t5_free, max_edges


def _split(start: int, stop: int, parts: int) -> list[tuple[int, int]]:
    size = stop - start
    parts = max(1, min(parts, size))
    bounds = [start + size * i // parts for i in range(parts + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i] < bounds[i + 1]]


class CensusSweep:
    """Полный перебор всех 2^C(n,3) систем на n вершинах.

    Диапазон масок обходится по возрастанию блоками; блок режется на
    непересекающиеся куски для процессов, результаты сводятся в порядке
    кусков, поэтому счётчики не зависят от числа процессов. После каждого
    блока (если задан путь) атомарно пишется JSON-курсор для возобновления.

    Args:
        n: Число вершин.
        deep: Разрешить n = 7 (2^35 масок).
        workers: Число процессов; 1 — без пула.
        checkpoint_path: Файл курсора или None.
        checkpoint_every: Размер блока между записями курсора.
        progress: Показывать прогресс tqdm.
        logger: Логгер; по умолчанию по имени класса.
    """

    def __init__(
        self,
        n: int,
        *,
        deep: bool = False,
        workers: int = 1,
        checkpoint_path: Optional[Path] = None,
        checkpoint_every: int = CHECKPOINT_EVERY,
        progress: bool = False,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        if n < 3:
            raise InvalidArgumentError(f'census needs n >= 3, got {n}')
        limit = DEEP_MAX_N if deep else CENSUS_MAX_N
        if n > limit:
            raise ResourceLimitError(
                f'census at n={n} needs the deep-sweep flag'
                if n <= DEEP_MAX_N else f'census is capped at n={DEEP_MAX_N}'
            )
        if workers < 1:
            raise InvalidArgumentError('workers must be >= 1')
        if checkpoint_every < 1:
            raise InvalidArgumentError('checkpoint_every must be >= 1')
        self.n = n
        self.workers = workers
        self.checkpoint_path = (
            Path(checkpoint_path) if checkpoint_path else None
        )
        self.checkpoint_every = checkpoint_every
        self.progress = progress
        self.logger = logger or logging.getLogger(self.__class__.__name__)

    def run(self) -> CensusReport:
        n = self.n
        total = 1 << comb(n, 3)
        state = self._load_checkpoint() or {
            'next_mask': 0,
            'i_n': 0,
            's_n': 0,
            't5_free': 0,
            'max_t5_free_edges': -1,
        }
        self.logger.info(
            'Census started: n=%d, masks=%d, workers=%d, resume_from=%d',
            n,
            total,
            self.workers,
            state['next_mask'],
        )
        started = time.monotonic()
        _tables(n)

        pool = (
            ProcessPoolExecutor(max_workers=self.workers)
            if self.workers > 1 else None
        )
        bar = tqdm(
            total=total,
            initial=state['next_mask'],
            disable=not self.progress,
            unit='mask',
        )
        try:
            while state['next_mask'] < total:
                block_end = min(total, state['next_mask'] + self.checkpoint_every)
                chunks = _split(
                    state['next_mask'],
                    block_end,
                    self.workers * CHUNKS_PER_WORKER,
                )
                if pool is None:
                    results = [_sweep_range(n, a, b) for a, b in chunks]
                else:
                    futures = [
                        pool.submit(_sweep_range, n, a, b) for a, b in chunks
                    ]
                    results = [f.result() for f in futures]
                for i_n, s_n, t5_free, max_edges in results:
                    state['i_n'] += i_n
                    state['s_n'] += s_n
                    state['t5_free'] += t5_free
                    state['max_t5_free_edges'] = max(
                        state['max_t5_free_edges'],
                        max_edges,
                    )
                bar.update(block_end - state['next_mask'])
                state['next_mask'] = block_end
                self.logger.debug('Census block done: next_mask=%d', block_end)
                if self.checkpoint_path is not None:
                    self._write_checkpoint(state)
        except InvariantViolationError:
            self.logger.critical('Census aborted: runtime invariant failed.')
            raise
        finally:
            bar.close()
            if pool is not None:
                pool.shutdown()

        report = CensusReport(
            n=n,
            total=total,
            i_n=state['i_n'],
            s_n=state['s_n'],
            t5_free=state['t5_free'],
            max_t5_free_edges=state['max_t5_free_edges'],
            elapsed=time.monotonic() - started,
            workers=self.workers,
        )
        if report.i_n != report.t5_free or not report.s_n <= report.i_n:
            raise InvariantViolationError(f'inconsistent census: {report}')
        self.logger.info(
            'Census finished: n=%d, I=%d, S=%d, extra=%d',
            n,
            report.i_n,
            report.s_n,
            report.extra,
        )
        return report

    def _checkpoint_counts(self, state: dict) -> dict:
        return {'n': self.n, 'version': ARTIFACT_VERSION, **state}

    def _write_checkpoint(self, state: dict) -> None:
        record = self._checkpoint_counts(state)
        record['checksum'] = counts_checksum(record)
        path = self.checkpoint_path
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix='.tmp')
        with os.fdopen(fd, 'w', encoding='utf-8') as fh:
            json.dump(record, fh, sort_keys=True)
        os.replace(tmp, path)
        self.logger.info('Checkpoint written: next_mask=%d', state['next_mask'])

    def _load_checkpoint(self) -> dict | None:
        path = self.checkpoint_path
        if path is None or not path.exists():
            return None
        record = json.loads(path.read_text(encoding='utf-8'))
        checksum = record.pop('checksum', None)
        if checksum != counts_checksum(record):
            raise CacheChecksumError(f'checkpoint {path} failed its checksum')
        if record.get('n') != self.n or record.get('version') != ARTIFACT_VERSION:
            self.logger.warning(
                'Checkpoint %s is for n=%s version=%s; starting over',
                path,
                record.get('n'),
                record.get('version'),
            )
            return None
        return {
            k: record[k]
            for k in ('next_mask', 'i_n', 's_n', 't5_free', 'max_t5_free_edges')
        }


def full_census(
    n: int,
    *,
    deep: bool = False,
    workers: int = 1,
    checkpoint_path: Optional[Path] = None,
    checkpoint_every: int = CHECKPOINT_EVERY,
    progress: bool = False,
) -> CensusReport:
    """Точная перепись I(n), S(n) перебором всех масок рёбер."""
    return CensusSweep(
        n,
        deep=deep,
        workers=workers,
        checkpoint_path=checkpoint_path,
        checkpoint_every=checkpoint_every,
        progress=progress,
    ).run()


@dataclass(frozen=True)
class LowerBoundCheck:
    """Проверка (1 + 2^-4n) S(n) < I(n) в целых числах.

    Неравенство равносильно 2^(4n) (I - S) > S; slack — разность сторон.
    """
    n: int
    holds: bool
    slack: int


def verify_census_lower_bound(report: CensusReport) -> LowerBoundCheck:
    lhs = (1 << (4 * report.n)) * (report.i_n - report.s_n)
    return LowerBoundCheck(
        n=report.n,
        holds=lhs > report.s_n,
        slack=lhs - report.s_n,
    )


class _BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class ExtremalResult:
    """Итог поиска ex(n, T5).

    Attributes:
        n: Число вершин.
        lower: Лучшее найденное число рёбер (у witness ровно столько).
        upper: Доказанная верхняя граница; равна lower при completed.
        completed: Перебор завершён в пределах бюджета.
        nodes: Число посещённых узлов.
        witness: Система без T5 с lower рёбрами.
    """
    n: int
    lower: int
    upper: int
    completed: bool
    nodes: int
    witness: TripleSystem

    @property
    def asymptotic_bound(self) -> Fraction:
        return Fraction(2 * self.n ** 3, 27)

    @property
    def within_asymptotic_bound(self) -> bool:
        return self.lower <= self.asymptotic_bound


class ExtremalSearch:
    """Ветви и границы по тройкам в колекс-порядке: включить / исключить.

    Стартовая нижняя граница — B3(n). Ветвь отсекается, если даже взятие
    всех оставшихся троек не превзойдёт лучший результат; включение тройки
    отвергается, если после него некоторое соседство содержит ребро.

    Args:
        n: Число вершин.
        node_budget: Предел числа узлов или None.
        time_budget: Предел времени в секундах или None.
        logger: Логгер; по умолчанию по имени класса.
    """

    def __init__(
        self,
        n: int,
        *,
        node_budget: Optional[int] = None,
        time_budget: Optional[float] = None,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        if n < 3:
            raise InvalidArgumentError(f'extremal search needs n >= 3, got {n}')
        self.n = n
        self.node_budget = node_budget
        self.time_budget = time_budget
        self.logger = logger or logging.getLogger(self.__class__.__name__)

        self.total = comb(n, 3)
        self.triples = all_triples(n)
        self.vt = vertex_triple_masks(n)
        self.inside = (
            tuple(inside_mask(n, s) for s in range(1 << n)) if n <= 12 else None
        )
        self.edges = 0
        self.nbr = [0] * comb(n, 2)
        self.links = [0] * n
        self.nodes = 0
        self.pending = -1
        self._deadline: float | None = None

        witness, _ = build_b3(n)
        self.best = witness.edge_count
        self.best_edges = witness.edges

    def _inside(self, vmask: int) -> int:
        if self.inside is not None:
            return self.inside[vmask]
        return inside_mask(self.n, vmask)

    def _pairs(self, idx: int) -> tuple[tuple[int, int], ...]:
        # (ранг пары из тройки, третья вершина)
        a, b, c = self.triples[idx]
        return (
            (comb(b, 2) + a, c),
            (comb(c, 2) + a, b),
            (comb(c, 2) + b, a),
        )

    def _toggle(self, idx: int) -> None:
        self.edges ^= 1 << idx
        for pair, w in self._pairs(idx):
            self.nbr[pair] ^= 1 << w
            self.links[w] ^= 1 << pair

    def _can_add(self, idx: int) -> bool:
        self._toggle(idx)
        ok = True
        a, b, c = self.triples[idx]
        if self.links[a] & self.links[b] & self.links[c]:
            ok = False
        else:
            for pair, _ in self._pairs(idx):
                if self.edges & self._inside(self.nbr[pair]):
                    ok = False
                    break
        self._toggle(idx)
        return ok

    def _tick(self, idx: int, count: int) -> None:
        self.nodes += 1
        over = self.node_budget is not None and self.nodes > self.node_budget
        if (
            not over
            and self._deadline is not None
            and self.nodes % 1024 == 0
            and time.monotonic() > self._deadline
        ):
            over = True
        if over:
            self.pending = max(self.pending, count + self.total - idx)
            raise _BudgetExhausted

    def _branch(self, idx: int, count: int) -> None:
        self._tick(idx, count)
        if count > self.best:
            self.best = count
            self.best_edges = self.edges
        if count + self.total - idx <= self.best or idx == self.total:
            return
        if self._can_add(idx):
            self._toggle(idx)
            try:
                self._branch(idx + 1, count + 1)
            except _BudgetExhausted:
                # ветка «исключить» ещё не просмотрена
                self.pending = max(self.pending, count + self.total - idx - 1)
                raise
            finally:
                self._toggle(idx)
        self._branch(idx + 1, count)

    def run(self) -> ExtremalResult:
        if self.time_budget is not None:
            self._deadline = time.monotonic() + self.time_budget
        completed = True
        try:
            self._branch(0, 0)
        except _BudgetExhausted:
            completed = False
            self.logger.warning(
                'Extremal search budget exhausted: n=%d, nodes=%d',
                self.n,
                self.nodes,
            )
        upper = self.best if completed else max(self.best, self.pending)
        result = ExtremalResult(
            n=self.n,
            lower=self.best,
            upper=min(upper, self.total),
            completed=completed,
            nodes=self.nodes,
            witness=TripleSystem(self.n, self.best_edges),
        )
        self.logger.info(
            'Extremal search: n=%d, lower=%d, upper=%d, completed=%s',
            self.n,
            result.lower,
            result.upper,
            result.completed,
        )
        return result


def extremal_search(
    n: int,
    node_budget: Optional[int] = None,
    time_budget: Optional[float] = None,
) -> ExtremalResult:
    """ex(n, T5) методом ветвей и границ (см. ExtremalSearch)."""
    return ExtremalSearch(
        n,
        node_budget=node_budget,
        time_budget=time_budget,
    ).run()

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb, floor, ceil
from typing import Callable, Iterable, Optional

import numpy as np

from . import DEFAULT_SEED
from .bounds import (
    DEFAULT_X_GRID,
    entropy_facts_check,
    greedy_matching,
    max_matching_count,
    max_matching_table,
    s_bound_check,
    tail_fact_threshold,
    triangle_counting_trial,
)
from .census import CensusReport, extremal_search, full_census, verify_census_lower_bound
from .constructions import b3, ns_family_base, ns_sample
from .detection import (
    contains_t5,
    has_independent_neighborhoods,
    optimal_partitions,
)
from .errors import InvalidArgumentError, InvariantViolationError, T5Error
from .hypergraph import OrderedPartition, PairGraph, TripleSystem, classify_edges

SUITES = ('primary', 'statistical', 'all')
WORKER_COUNTS = (1, 2, 4, 8)
NS_SAMPLES = 1000
MATCHING_GRAPHS = 10_000
ORACLE_SAMPLES = 10_000

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckOutcome:
    number: int
    name: str
    suite: str
    passed: bool
    claim: str
    detail: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        return {
            'criterion': self.number,
            'name': self.name,
            'suite': self.suite,
            'passed': self.passed,
            'claim': self.claim,
            'detail': self.detail,
        }


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    suite: str
    claim: str
    check: Callable[[AcceptanceContext], tuple[bool, dict]]


CRITERIA: dict[int, Criterion] = {}


def criterion(number: int, name: str, suite: str, claim: str):
    """Регистрирует проверку приёмки под номером number."""
    def register(func: Callable[[AcceptanceContext], tuple[bool, dict]]):
        if number in CRITERIA:
            raise InvalidArgumentError(f'criterion {number} registered twice')
        CRITERIA[number] = Criterion(number, name, suite, claim, func)
        return func
    return register


class AcceptanceContext:
    """Общие данные прогона: зерно, число процессов, кэш переписей."""

    def __init__(
        self,
        seed: int = DEFAULT_SEED,
        workers: int = 1,
        *,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        self.seed = seed
        self.workers = workers
        self.logger = logger or logging.getLogger(self.__class__.__name__)
        self._census: dict[int, CensusReport] = {}

    def census(self, n: int) -> CensusReport:
        if n not in self._census:
            self._census[n] = full_census(n, workers=self.workers)
        return self._census[n]

    def remember(self, report: CensusReport) -> None:
        self._census.setdefault(report.n, report)


def brute_force_d_h(h: TripleSystem) -> int:
    """Минимум несогласованных рёбер перебором всех 2^n масок X."""
    return min(
        classify_edges(h, OrderedPartition(h.n, x)).d_p
        for x in range(1 << h.n)
    )


@criterion(
    1, 'equivalence', 'primary',
    'independent neighborhoods hold exactly when no T5 is present (n=4, 5)',
)
def _equivalence(ctx: AcceptanceContext) -> tuple[bool, dict]:
    mismatches = 0
    checked = 0
    for n in (4, 5):
        for mask in range(1 << comb(n, 3)):
            h = TripleSystem(n, mask)
            checked += 1
            if has_independent_neighborhoods(h) == bool(contains_t5(h)):
                mismatches += 1
    return mismatches == 0, {'checked': checked, 'mismatches': mismatches}


@criterion(
    2, 'census', 'primary',
    'census counts satisfy S <= I = T5-free and agree across worker counts',
)
def _census_counts(ctx: AcceptanceContext) -> tuple[bool, dict]:
    detail: dict = {}
    passed = True
    for n in (4, 5, 6):
        reports = [full_census(n, workers=w) for w in WORKER_COUNTS]
        counts = {tuple(sorted(r.counts().items())) for r in reports}
        agree = len(counts) == 1
        first = reports[0]
        ok = agree and first.s_n <= first.i_n == first.t5_free
        passed &= ok
        ctx.remember(first)
        detail[str(n)] = {**first.counts(), 'workers': list(WORKER_COUNTS), 'agree': agree}
    return passed, detail


@criterion(
    3, 'lower-bound', 'primary',
    'I(n) > (1 + 2^-4n) S(n) holds at n = 6 in integer arithmetic',
)
def _lower_bound(ctx: AcceptanceContext) -> tuple[bool, dict]:
    detail = {}
    for n in (4, 5, 6):
        check = verify_census_lower_bound(ctx.census(n))
        detail[str(n)] = {'holds': check.holds, 'slack': str(check.slack)}
    return detail['6']['holds'], detail


@criterion(
    4, 'non-semibipartite-family', 'primary',
    'every sample of the F plus G family is T5-free and not semi-bipartite',
)
def _ns_family(ctx: AcceptanceContext) -> tuple[bool, dict]:
    failures = []
    for n in range(9, 65):
        base = ns_family_base(n)
        if len(base.g_edges) < base.stated_lower_bound or not 3 * base.t < 2 * n + 6:
            failures.append({'n': n, 'pool': len(base.g_edges), 't': base.t})
    for n in range(9, 17):
        base = ns_family_base(n)
        for i in range(NS_SAMPLES):
            try:
                ns_sample(base, seed=ctx.seed + 1_000_003 * n + i, verify=True)
            except InvariantViolationError as exc:
                failures.append({'n': n, 'sample': i, 'error': str(exc)})
                break
    return not failures, {'samples': NS_SAMPLES, 'failures': failures}


@criterion(
    5, 'b3-argmax', 'primary',
    'the maximizing part size of C(a,2)(n-a) is floor or ceil of 2n/3',
)
def _b3_argmax(ctx: AcceptanceContext) -> tuple[bool, dict]:
    bad = [
        n for n in range(3, 1001)
        if b3(n).a not in (floor(2 * n / 3), ceil(2 * n / 3))
    ]
    return not bad, {'bad': bad}


@criterion(
    6, 'extremal', 'primary',
    'exact ex(n, T5) at n = 5, 6 has a T5-free witness and matches the census',
)
def _extremal(ctx: AcceptanceContext) -> tuple[bool, dict]:
    detail = {}
    passed = True
    for n in (5, 6):
        result = extremal_search(n)
        w = result.witness
        valid = (
            result.completed
            and w.edge_count == result.lower
            and has_independent_neighborhoods(w)
            and not contains_t5(w)
            and result.lower >= b3(n).value
        )
        census_max = ctx.census(n).max_t5_free_edges
        agree = census_max == result.lower
        passed &= valid and agree
        detail[str(n)] = {
            'ex': result.lower,
            'census_max': census_max,
            'b3': b3(n).value,
            'nodes': result.nodes,
        }
    return passed, detail


@criterion(
    7, 'greedy-matching', 'primary',
    'greedy matching has at least |G|/2n pairs',
)
def _matching(ctx: AcceptanceContext) -> tuple[bool, dict]:
    rng = np.random.default_rng(ctx.seed)
    failures = 0
    for _ in range(MATCHING_GRAPHS):
        n = int(rng.integers(2, 51))
        density = rng.random()
        mask = 0
        for idx in np.flatnonzero(rng.random(comb(n, 2)) < density):
            mask |= 1 << int(idx)
        try:
            greedy_matching(PairGraph(n, mask))
        except InvariantViolationError:
            failures += 1
    return failures == 0, {'graphs': MATCHING_GRAPHS, 'failures': failures}


@criterion(
    8, 'matchcount', 'primary',
    'graphs with a fixed maximum matching are at most the closed-form bound',
)
def _matchcount(ctx: AcceptanceContext) -> tuple[bool, dict]:
    table = max_matching_table(7)
    spot = max_matching_count(3, 1)
    bad = [(r.n_vertices, r.m) for r in table if not r.holds]
    return (
        not bad and spot.exact == 4 and spot.bound == 5,
        {'pairs': len(table), 'bad': bad},
    )


@criterion(
    9, 'entropy', 'primary',
    'C(n, floor(xn)) < 2^(H(x)n); tail sums recorded with their threshold',
)
def _entropy(ctx: AcceptanceContext) -> tuple[bool, dict]:
    passed = True
    thresholds = {}
    for n in (32, 48, 64):
        for x in DEFAULT_X_GRID:
            passed &= entropy_facts_check(n, x, exact=True).single
        thresholds[str(n)] = tail_fact_threshold(n)
    return passed, {'tail_threshold': thresholds}


@criterion(
    10, 'triangle-counting', 'statistical',
    'random cylinders of density 1/l have (1 +- 0.1) m^3/l^3 triangles',
)
def _triangles(ctx: AcceptanceContext) -> tuple[bool, dict]:
    detail = {}
    passed = True
    for l in (2, 3):
        trial = triangle_counting_trial(300, l, 20, seed=ctx.seed)
        passed &= trial.within >= 19
        detail[str(l)] = {'within': trial.within, 'runs': len(trial.counts)}
    return passed, detail


@criterion(
    11, 's-lower-bound', 'primary',
    'log2 S(n) >= (2/27)n^3 - n^2/9 - n/9 at n = 4, 5, 6',
)
def _s_bound(ctx: AcceptanceContext) -> tuple[bool, dict]:
    detail = {}
    passed = True
    for n in (4, 5, 6):
        prev = ctx.census(n - 1).s_n if n > 4 else None
        report = s_bound_check(n, ctx.census(n).s_n, prev)
        passed &= bool(report.exact_holds)
        detail[str(n)] = {
            'bound': str(report.bound),
            'holds': report.exact_holds,
            'recursion': report.recursion_holds,
        }
    return passed, detail


@criterion(
    12, 'd-h-oracle', 'primary',
    'optimized D_H equals the brute-force minimum over all partitions',
)
def _d_h_oracle(ctx: AcceptanceContext) -> tuple[bool, dict]:
    rng = np.random.default_rng(ctx.seed)
    systems = [TripleSystem(4, mask) for mask in range(1 << 4)]
    systems += [
        TripleSystem(5, int(mask))
        for mask in rng.integers(0, 1 << 10, size=ORACLE_SAMPLES)
    ]
    bad = [
        h.to_hex_text() for h in systems
        if optimal_partitions(h, 0).d_h != brute_force_d_h(h)
    ]
    return not bad, {'checked': len(systems), 'bad': bad[:5]}


def _selected(suite: str, numbers: Optional[Iterable[int]]) -> list[Criterion]:
    picked = sorted(CRITERIA.values(), key=lambda c: c.number)
    if suite != 'all':
        picked = [c for c in picked if c.suite == suite]
    if numbers is not None:
        wanted = set(numbers)
        picked = [c for c in picked if c.number in wanted]
    return picked


def run_acceptance(
    suite: str = 'primary',
    *,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
    numbers: Optional[Iterable[int]] = None,
) -> list[CheckOutcome]:
    """Запускает зарегистрированные проверки набора suite.

    Ошибка внутри проверки засчитывается как провал с текстом ошибки.
    """
    if suite not in SUITES:
        raise InvalidArgumentError(f'unknown suite {suite!r}')
    ctx = AcceptanceContext(seed, workers)
    outcomes = []
    for item in _selected(suite, numbers):
        logger.info('Acceptance %d (%s) started', item.number, item.name)
        try:
            passed, detail = item.check(ctx)
        except T5Error as exc:
            logger.error('Acceptance %d failed with %s', item.number, exc)
            passed, detail = False, {'error': str(exc)}
        outcomes.append(
            CheckOutcome(item.number, item.name, item.suite, passed, item.claim, detail)
        )
        logger.info(
            'Acceptance %d (%s): %s',
            item.number,
            item.name,
            'PASS' if passed else 'FAIL',
        )
    return outcomes

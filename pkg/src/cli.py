from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import ARTIFACT_VERSION, DEFAULT_SEED, log_conf
from .acceptance import SUITES, run_acceptance
from .bounds import (
    DEFAULT_RESTARTS,
    DEFAULT_X_GRID,
    chernoff_empirical,
    entropy_facts_check,
    greedy_matching,
    lower_density_check,
    max_matching_count,
    max_matching_table,
    s_bound_check,
    tail_fact_threshold,
    threshold_hierarchy_check,
    triangle_counting_trial,
)
from .cache import CensusCache, default_cache_dir, default_cache_url
from .census import (
    CHECKPOINT_EVERY,
    CENSUS_MAX_N,
    ExtremalSearch,
    full_census,
    verify_census_lower_bound,
)
from .constructions import (
    DEFAULT_THRESHOLDS,
    Thresholds,
    build_b3,
    ns_family_base,
    ns_sample,
    random_semibipartite,
    random_triple_system,
)
from .detection import (
    DEFAULT_PARTITION_CAP,
    DEFAULT_WITNESS_CAP,
    bad_vertex_check,
    classify_conditions,
    contains_t5,
    has_independent_neighborhoods,
    is_semibipartite,
    optimal_partitions,
    rich_edges,
)
from .errors import (
    CacheChecksumError,
    InvalidArgumentError,
    InvariantViolationError,
    ResourceLimitError,
    T5Error,
)
from .hypergraph import OrderedPartition, PairGraph, TripleSystem
from .reports import FORMATS, Report, report_emit

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

BOUND_CHECKS = (
    'entropy',
    'chernoff',
    'matching',
    'matchcount',
    'triangle',
    'lowdense',
    'sbound',
    'hierarchy',
)

logger = logging.getLogger('cli')


@dataclass(frozen=True)
class RunConfig:
    """Параметры запуска, которые эхом попадают в каждый отчёт.

    Число процессов считается происхождением прогона и попадает в отчёт
    только вместе с --provenance.
    """
    command: str
    n: Optional[int]
    seed: int
    thresholds: dict
    budgets: dict
    fmt: str
    cache_dir: str
    deep: bool
    workers: int = 1
    options: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        known = {
            'command', 'n', 'seed', 'format', 'cache_dir', 'deep', 'workers',
            'log_level', 'output', 'provenance', 'handler', 'budget',
            'time_budget', 'eta', 'mu', 'alpha', 'beta',
        }
        options = {
            k: v for k, v in sorted(vars(args).items())
            if k not in known and v is not None
        }
        return cls(
            command=args.command,
            n=getattr(args, 'n', None),
            seed=args.seed,
            thresholds={
                name: getattr(args, name)
                for name in ('eta', 'mu', 'alpha', 'beta')
                if getattr(args, name, None) is not None
            },
            budgets={
                name: getattr(args, name)
                for name in ('budget', 'time_budget')
                if getattr(args, name, None) is not None
            },
            fmt=args.format,
            cache_dir=str(args.cache_dir),
            deep=bool(getattr(args, 'deep', False)),
            workers=getattr(args, 'workers', 1) or 1,
            options={k: str(v) if isinstance(v, Path) else v for k, v in options.items()},
        )

    def as_dict(self, *, include_provenance: bool = False) -> dict:
        data = asdict(self)
        if not include_provenance:
            data.pop('workers')
        return data


def _thresholds(args: argparse.Namespace) -> Thresholds:
    return Thresholds(
        eta=args.eta if args.eta is not None else DEFAULT_THRESHOLDS.eta,
        mu=args.mu if args.mu is not None else DEFAULT_THRESHOLDS.mu,
        alpha=args.alpha if args.alpha is not None else DEFAULT_THRESHOLDS.alpha,
        beta=args.beta if args.beta is not None else DEFAULT_THRESHOLDS.beta,
    )


def _read_system(args: argparse.Namespace) -> TripleSystem:
    if args.system:
        return TripleSystem.parse(args.system)
    if args.input is None:
        raise InvalidArgumentError('a system is required: --input FILE or --system TEXT')
    if args.input == '-':
        text = sys.stdin.read()
    else:
        try:
            text = Path(args.input).read_text(encoding='utf-8')
        except OSError as exc:
            raise InvalidArgumentError(f'cannot read {args.input}: {exc}') from exc
    return TripleSystem.parse(text.strip())


def _cmd_check(args: argparse.Namespace) -> tuple[Report, bool]:
    h = _read_system(args)
    t5 = contains_t5(h)
    partition = is_semibipartite(h, cap=args.cap)
    row = {
        'system': h.to_hex_text(),
        'contains_t5': t5.found,
        'independent_neighborhoods': has_independent_neighborhoods(h),
        'semibipartite': partition is not None,
        'partition': partition.to_text() if partition else None,
        'witness': [list(e) for e in t5.witness.edges] if t5.witness else None,
    }
    if row['independent_neighborhoods'] == row['contains_t5']:
        raise InvariantViolationError('T5 detection paths disagree')
    claims = (
        'a triple system has independent neighborhoods exactly when it has no T5',
        'a semi-bipartite system has independent neighborhoods',
    )
    return Report('check', (row,), claims), True


def _cmd_partition(args: argparse.Namespace) -> tuple[Report, bool]:
    h = _read_system(args)
    thresholds = _thresholds(args)
    result = optimal_partitions(h, args.witness_cap, cap=args.cap)
    flags = classify_conditions(h, thresholds, cap=args.cap)
    row: dict = {
        'n': h.n,
        'd_h': result.d_h,
        'optimal_total': result.total,
        'truncated': result.truncated,
        'witnesses': [p.to_text() for p in result.witnesses],
        'conditions': flags.as_dict(),
        'small_shadow': flags.small_shadow,
        'condition_witnesses': {
            str(k): {
                'partition': w.partition.to_text(),
                'vertex': w.vertex,
                'edge': list(w.edge) if w.edge else None,
                'detail': w.detail,
            }
            for k, w in sorted(flags.witnesses.items())
        },
    }
    if result.witnesses:
        first = result.witnesses[0]
        rich = rich_edges(h, first, thresholds.alpha)
        row['rich_edges'] = len(rich.rich_edges)
        row['poor_vertex_bound'] = rich.poor_vertex_bound_holds(thresholds.mu)
        row['bad_vertices_clear'] = bad_vertex_check(h, first, thresholds.mu).holds
        if args.lowdense:
            row['lower_density'] = lower_density_check(
                h, first, thresholds.mu, args.effort, seed=args.seed,
            ).as_dict()
    claims = (
        'D_H is the minimum number of inconsistent edges over all ordered partitions',
        'conditions (1)-(5) are checked on every optimal partition',
    )
    return Report('partition', (row,), claims), True


def _cmd_construct(args: argparse.Namespace) -> tuple[Report, bool]:
    rows = []
    family = args.family
    base = ns_family_base(args.n) if family == 'ns' else None
    for i in range(args.count):
        seed = args.seed + i
        extra: dict = {}
        if family == 'b3':
            h, p = build_b3(args.n)
            extra['partition'] = p.to_text()
        elif family == 'ns':
            h = ns_sample(base, seed=seed)
            extra.update(
                pool=len(base.g_edges),
                log2_size=base.log2_size,
                chain_holds=base.chain_holds(),
            )
        elif family == 'random-sb':
            a = args.a if args.a is not None else build_b3(args.n)[1].x_mask.bit_count()
            h = random_semibipartite(args.n, a, args.p, seed)
        else:
            h = random_triple_system(args.n, args.p, seed)
        rows.append({
            'family': family,
            'n': args.n,
            'index': i,
            'edges': h.edge_count,
            'system': h.to_hex_text(),
            **extra,
        })
    claims = {
        'b3': ('B3(n) is semi-bipartite with b3(n) edges',),
        'ns': ('F plus any subset of G is T5-free and not semi-bipartite',),
        'random-sb': ('a subset of a consistent edge set is semi-bipartite',),
        'random': ('each triple is present independently with probability p',),
    }[family]
    return Report('construct', tuple(rows), claims), True


def _cmd_census(args: argparse.Namespace) -> tuple[Report, bool]:
    report = full_census(
        args.n,
        deep=args.deep,
        workers=args.workers,
        checkpoint_path=args.checkpoint,
        checkpoint_every=args.checkpoint_every,
        progress=args.progress,
    )
    consistent = True
    if not args.no_cache:
        cache = CensusCache(args.cache_url or default_cache_url(args.cache_dir))
        try:
            consistent = cache.reconcile(report)
        finally:
            cache.dispose()
    check = verify_census_lower_bound(report)
    row = report.to_record(include_provenance=args.provenance)
    row['lower_bound_holds'] = check.holds
    row['lower_bound_slack'] = str(check.slack)
    row['cache_consistent'] = consistent
    claims = (
        'I(n) equals the number of T5-free systems',
        'S(n) <= I(n)',
        'I(n) > (1 + 2^-4n) S(n) evaluated in integers',
    )
    return Report('census', (row,), claims), consistent


def _cmd_extremal(args: argparse.Namespace) -> tuple[Report, bool]:
    result = ExtremalSearch(
        args.n,
        node_budget=args.budget,
        time_budget=args.time_budget,
    ).run()
    row = {
        'n': result.n,
        'lower': result.lower,
        'upper': result.upper,
        'completed': result.completed,
        'nodes': result.nodes,
        'witness': result.witness.to_hex_text(),
        'asymptotic_bound': str(result.asymptotic_bound),
        'within_asymptotic_bound': result.within_asymptotic_bound,
    }
    claims = ('ex(n, T5) lies between lower and upper; equal when completed',)
    return Report('extremal', (row,), claims), True


def _census_s(n: int, args: argparse.Namespace) -> int:
    cache = None
    if not args.no_cache:
        cache = CensusCache(args.cache_url or default_cache_url(args.cache_dir))
    try:
        cached = cache.load(n) if cache else None
        if cached is not None:
            return cached.s_n
        report = full_census(n)
        if cache:
            cache.store(report)
        return report.s_n
    finally:
        if cache:
            cache.dispose()


def _bounds_entropy(args: argparse.Namespace) -> tuple[list[dict], bool, str]:
    n = args.n or 64
    grid = (args.x,) if args.x is not None else DEFAULT_X_GRID
    rows = []
    for x in grid:
        facts = entropy_facts_check(n, x)
        rows.append({
            'n': n, 'x': x, 'k': facts.k,
            'single': facts.single, 'tail': facts.tail, 'exact': facts.exact,
        })
    if args.x is None:
        rows.append({'n': n, 'tail_threshold': tail_fact_threshold(n)})
    passed = all(r.get('single', True) for r in rows)
    return rows, passed, 'C(n, floor(xn)) < 2^(H(x)n) and the tail-sum version'


def _bounds_chernoff(args: argparse.Namespace) -> tuple[list[dict], bool, str]:
    m = args.m or 200
    p = args.p if args.p is not None else 0.5
    a = args.a if args.a is not None else 30
    trial = chernoff_empirical(m, p, a, args.trials or 100_000, args.seed)
    row = asdict(trial)
    row['holds'] = trial.holds
    return [row], trial.holds, 'P(S < ES - a) < exp(-a^2 / 2pm)'


def _bounds_matching(args: argparse.Namespace) -> tuple[list[dict], bool, str]:
    claim = 'a graph on n vertices has a matching of size at least |G|/2n'
    if args.pairs:
        n = args.n or 1 + max(int(v) for item in args.pairs.split(',') for v in item.split('-'))
        g = PairGraph.from_pairs(
            n,
            (tuple(int(v) for v in item.split('-')) for item in args.pairs.split(',')),
        )
        matching = greedy_matching(g)
        return [{
            'n': n,
            'edges': g.size,
            'matching': [list(e) for e in matching.edge_list()],
        }], True, claim
    rng = np.random.default_rng(args.seed)
    graphs = args.trials or 1000
    failures = 0
    for _ in range(graphs):
        n = int(rng.integers(2, 51))
        mask = 0
        for idx in np.flatnonzero(rng.random(n * (n - 1) // 2) < rng.random()):
            mask |= 1 << int(idx)
        try:
            greedy_matching(PairGraph(n, mask))
        except InvariantViolationError:
            failures += 1
    return [{'graphs': graphs, 'failures': failures}], failures == 0, claim


def _bounds_matchcount(args: argparse.Namespace) -> tuple[list[dict], bool, str]:
    if args.n is not None and args.m is not None:
        results = [max_matching_count(args.n, args.m)]
    else:
        results = max_matching_table(args.n or 7)
    rows = [
        {'n_vertices': r.n_vertices, 'm': r.m, 'exact': r.exact,
         'bound': r.bound, 'holds': r.holds}
        for r in results
    ]
    return (
        rows,
        all(r.holds for r in results),
        'graphs with a fixed maximum matching M of size m number at most '
        '2^(2m^2-2m) (N-2m+2^(N-2m+1))^m',
    )


def _bounds_triangle(args: argparse.Namespace) -> tuple[list[dict], bool, str]:
    m = args.m or 300
    l = args.l or 2
    runs = args.trials or 20
    trial = triangle_counting_trial(m, l, runs, seed=args.seed)
    row = {
        'm': m, 'l': l, 'runs': runs,
        'expected': str(trial.expected),
        'within': trial.within,
        'counts': list(trial.counts),
    }
    return (
        [row],
        trial.within >= runs - runs // 20,
        'a random tripartite cylinder of density 1/l has (1 +- 0.1) m^3/l^3 triangles',
    )


def _bounds_lowdense(args: argparse.Namespace) -> tuple[list[dict], bool, str]:
    h = _read_system(args)
    if args.partition:
        p = OrderedPartition.parse(args.partition)
    else:
        result = optimal_partitions(h, 1, cap=args.cap)
        p = result.witnesses[0]
    mu = args.mu if args.mu is not None else DEFAULT_THRESHOLDS.mu
    report = lower_density_check(
        h, p, mu, args.effort, seed=args.seed, restarts=args.restarts,
    )
    row = {'partition': p.to_text(), **report.as_dict()}
    return [row], not report.violated, 'the ordered partition is mu-lower-dense'


def _bounds_sbound(args: argparse.Namespace) -> tuple[list[dict], bool, str]:
    n = args.n or CENSUS_MAX_N
    exact_s = args.s
    exact_prev = args.s_prev
    if exact_s is None and n <= CENSUS_MAX_N:
        exact_s = _census_s(n, args)
        if n > 3:
            exact_prev = _census_s(n - 1, args)
    report = s_bound_check(n, exact_s, exact_prev)
    row = {
        'n': n,
        'bound': str(report.bound),
        'construction_log2': report.construction_log2,
        'construction_holds': report.construction_holds,
        'exact_holds': report.exact_holds,
        'recursion_holds': report.recursion_holds,
    }
    passed = report.construction_holds and report.exact_holds is not False
    return [row], passed, 'log2 S(n) >= (2/27)n^3 - n^2/9 - n/9'


def _bounds_hierarchy(args: argparse.Namespace) -> tuple[list[dict], bool, str]:
    report = threshold_hierarchy_check(_thresholds(args))
    row = {**report.checks, 'holds': report.holds}
    return [row], report.holds, 'the threshold hierarchy inequalities hold'


BOUND_HANDLERS: dict[str, Callable[[argparse.Namespace], tuple[list[dict], bool, str]]] = {
    'entropy': _bounds_entropy,
    'chernoff': _bounds_chernoff,
    'matching': _bounds_matching,
    'matchcount': _bounds_matchcount,
    'triangle': _bounds_triangle,
    'lowdense': _bounds_lowdense,
    'sbound': _bounds_sbound,
    'hierarchy': _bounds_hierarchy,
}


def _cmd_bounds(args: argparse.Namespace) -> tuple[Report, bool]:
    rows, passed, claim = BOUND_HANDLERS[args.check](args)
    return Report(f'bounds-{args.check}', tuple(rows), (claim,)), passed


def _cmd_verify(args: argparse.Namespace) -> tuple[Report, bool]:
    outcomes = run_acceptance(
        args.suite,
        seed=args.seed,
        workers=args.workers,
        numbers=args.criteria,
    )
    rows = tuple(o.as_row() for o in outcomes)
    claims = tuple(o.claim for o in outcomes)
    return Report('verify', rows, claims), all(o.passed for o in outcomes)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f'expected a positive integer, got {text}')
    return value


def _add_system_args(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument('--input', help='File with a serialized system ("-" for stdin)')
    source.add_argument('--system', help='Serialized system inline')
    parser.add_argument('--cap', type=int, default=DEFAULT_PARTITION_CAP)


def _add_threshold_args(parser: argparse.ArgumentParser) -> None:
    for name in ('eta', 'mu', 'alpha', 'beta'):
        parser.add_argument(f'--{name}', type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--format', choices=FORMATS, default='json')
    common.add_argument(
        '--log-level',
        default='INFO',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
    )
    common.add_argument('--seed', type=int, default=DEFAULT_SEED)
    common.add_argument(
        '--provenance',
        action='store_true',
        help='Include elapsed time, worker count and version in the report',
    )
    common.add_argument('--output', type=Path, default=None)
    common.add_argument('--cache-dir', type=Path, default=None)
    common.add_argument('--cache-url', default=None)
    common.add_argument('--no-cache', action='store_true')

    parser = argparse.ArgumentParser(
        prog='t5census',
        description='T5-free triple systems: detection, constructions, census and bounds',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    check = sub.add_parser('check', parents=[common], help='Detect T5 and semi-bipartiteness')
    _add_system_args(check)
    check.set_defaults(handler=_cmd_check)

    partition = sub.add_parser(
        'partition', parents=[common], help='Optimal partitions and conditions',
    )
    _add_system_args(partition)
    _add_threshold_args(partition)
    partition.add_argument('--witness-cap', type=int, default=DEFAULT_WITNESS_CAP)
    partition.add_argument('--lowdense', action='store_true')
    partition.add_argument('--effort', choices=['exact', 'adversarial'], default='exact')
    partition.set_defaults(handler=_cmd_partition)

    construct = sub.add_parser('construct', parents=[common], help='Emit constructions')
    construct.add_argument(
        '--family', choices=['b3', 'ns', 'random-sb', 'random'], required=True,
    )
    construct.add_argument('--n', type=int, required=True)
    construct.add_argument('--count', type=_positive_int, default=1)
    construct.add_argument('--a', type=int, default=None)
    construct.add_argument('--p', type=float, default=0.5)
    construct.set_defaults(handler=_cmd_construct)

    census = sub.add_parser('census', parents=[common], help='Exact census of I(n), S(n)')
    census.add_argument('--n', type=int, required=True)
    census.add_argument('--deep', action='store_true')
    census.add_argument('--workers', type=_positive_int, default=1)
    census.add_argument('--checkpoint', type=Path, default=None)
    census.add_argument('--checkpoint-every', type=_positive_int, default=CHECKPOINT_EVERY)
    census.add_argument('--progress', action='store_true')
    census.set_defaults(handler=_cmd_census)

    extremal = sub.add_parser('extremal', parents=[common], help='Branch and bound for ex(n, T5)')
    extremal.add_argument('--n', type=int, required=True)
    extremal.add_argument('--budget', type=_positive_int, default=None)
    extremal.add_argument('--time-budget', type=float, default=None)
    extremal.set_defaults(handler=_cmd_extremal)

    bounds = sub.add_parser('bounds', parents=[common], help='Supporting inequality checks')
    bounds.add_argument('--check', choices=BOUND_CHECKS, required=True)
    bounds.add_argument('--n', type=int, default=None)
    bounds.add_argument('--x', type=float, default=None)
    bounds.add_argument('--m', type=int, default=None)
    bounds.add_argument('--p', type=float, default=None)
    bounds.add_argument('--a', type=float, default=None)
    bounds.add_argument('--l', type=int, default=None)
    bounds.add_argument('--trials', type=_positive_int, default=None)
    bounds.add_argument('--pairs', default=None, help='Graph as "0-1,1-2,..."')
    bounds.add_argument('--partition', default=None, help='Partition as "n=<n>;X=0,1"')
    bounds.add_argument('--effort', choices=['exact', 'adversarial'], default='exact')
    bounds.add_argument('--restarts', type=int, default=DEFAULT_RESTARTS)
    bounds.add_argument('--s', type=int, default=None)
    bounds.add_argument('--s-prev', type=int, default=None)
    _add_system_args(bounds)
    _add_threshold_args(bounds)
    bounds.set_defaults(handler=_cmd_bounds)

    verify = sub.add_parser('verify', parents=[common], help='Run the acceptance suite')
    verify.add_argument('--suite', choices=SUITES, default='primary')
    verify.add_argument('--workers', type=_positive_int, default=1)
    verify.add_argument('--criteria', type=int, nargs='+', default=None)
    verify.set_defaults(handler=_cmd_verify)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Разбирает аргументы, выполняет команду и печатает отчёт.

    Returns:
        int: 0 — успех, 1 — проверка не прошла, 2 — неверные аргументы.

    Raises:
        Exception: Непредвиденная ошибка, уже записанная в лог.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    log_conf.set_level(args.log_level)
    if args.cache_dir is None:
        args.cache_dir = default_cache_dir()

    started = time.monotonic()
    try:
        report, passed = args.handler(args)
    except (InvalidArgumentError, ResourceLimitError) as exc:
        logger.error('%s: %s', type(exc).__name__, exc)
        return EXIT_USAGE
    except InvariantViolationError as exc:
        logger.critical('Invariant violated: %s', exc)
        return EXIT_FAILED
    except CacheChecksumError as exc:
        logger.error('Cache corrupted: %s', exc)
        return EXIT_FAILED
    except T5Error:
        logger.exception('Command %s failed', args.command)
        return EXIT_FAILED
    except Exception:
        logger.exception('Unexpected failure in command %s', args.command)
        raise

    config = RunConfig.from_args(args).as_dict(include_provenance=args.provenance)
    if args.provenance:
        config['provenance'] = {
            'version': ARTIFACT_VERSION,
            'elapsed': round(time.monotonic() - started, 3),
        }
    report = Report(report.kind, report.rows, report.claims, config)
    payload = report_emit(report, args.format)
    if args.output is not None:
        args.output.write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    return EXIT_OK if passed else EXIT_FAILED

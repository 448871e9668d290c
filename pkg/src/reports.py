from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import InvalidArgumentError

FORMATS = ('json', 'csv', 'text')

# Порядок колонок CSV для каждого вида отчёта; прочие ключи идут после
# в алфавитном порядке.
CSV_COLUMNS: dict[str, tuple[str, ...]] = {
    'census': (
        'n',
        'total',
        'i_n',
        's_n',
        'extra',
        't5_free',
        'max_t5_free_edges',
        'version',
        'elapsed',
        'workers',
    ),
    'extremal': ('n', 'lower', 'upper', 'completed', 'nodes', 'witness'),
    'check': (
        'system',
        'contains_t5',
        'independent_neighborhoods',
        'semibipartite',
        'partition',
        'witness',
    ),
    'construct': ('family', 'n', 'index', 'edges', 'system'),
    'verify': ('criterion', 'suite', 'passed', 'claim', 'detail'),
}


@dataclass(frozen=True)
class Report:
    """Результат одной команды: строки, проверенные утверждения, конфиг.

    Attributes:
        kind: Вид отчёта (имя команды или проверки).
        rows: Записи отчёта.
        claims: Утверждения, которые проверялись, словами.
        config: Конфигурация запуска или None.
    """
    kind: str
    rows: tuple[dict, ...]
    claims: tuple[str, ...] = ()
    config: dict | None = field(default=None)

    def to_record(self) -> dict:
        record: dict[str, Any] = {
            'kind': self.kind,
            'rows': list(self.rows),
            'claims': list(self.claims),
        }
        if self.config is not None:
            record['config'] = self.config
        return record


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (dict, list, tuple)):
        return json.dumps(value, sort_keys=True, default=str)
    if value is None:
        return ''
    return str(value)


def _columns(report: Report) -> list[str]:
    keys: set[str] = set()
    for row in report.rows:
        keys.update(row)
    fixed = [c for c in CSV_COLUMNS.get(report.kind, ()) if c in keys]
    return fixed + sorted(keys - set(fixed))


def _flatten(prefix: str, value: Any) -> Iterator[tuple[str, Any]]:
    if isinstance(value, dict):
        for key in sorted(value):
            yield from _flatten(f'{prefix}.{key}' if prefix else str(key), value[key])
    else:
        yield prefix, value


def report_emit(report: Report, fmt: str) -> bytes:
    """Детерминированная сериализация отчёта.

    json — ключи отсортированы, отступ 2; csv — колонки в порядке
    CSV_COLUMNS, разделитель строк LF; text — строки `kind:`, `claim:`
    и пары `ключ: значение`.

    Raises:
        InvalidArgumentError: Неизвестный формат.
    """
    if fmt == 'json':
        text = json.dumps(report.to_record(), sort_keys=True, indent=2, default=str)
        return (text + '\n').encode('utf-8')
    if fmt == 'csv':
        buf = io.StringIO()
        columns = _columns(report)
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(columns)
        for row in report.rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
        return buf.getvalue().encode('utf-8')
    if fmt == 'text':
        lines = [f'kind: {report.kind}']
        lines.extend(f'claim: {claim}' for claim in report.claims)
        if report.config is not None:
            lines.extend(
                f'config.{key}: {_cell(value)}'
                for key, value in _flatten('', report.config)
            )
        for i, row in enumerate(report.rows):
            lines.append(f'[{i}]')
            lines.extend(f'{key}: {_cell(value)}' for key, value in _flatten('', row))
        return ('\n'.join(lines) + '\n').encode('utf-8')
    raise InvalidArgumentError(f'unknown report format {fmt!r}')

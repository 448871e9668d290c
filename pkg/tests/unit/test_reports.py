from __future__ import annotations

import json

import pytest

from src.errors import InvalidArgumentError
from src.reports import Report, report_emit

pytestmark = [pytest.mark.unit]


@pytest.fixture()
def census_report() -> Report:
    """Отчёт переписи n=4 с ключами в случайном порядке."""
    return Report(
        kind='census',
        rows=({
            'version': '1.0.0',
            'max_t5_free_edges': 4,
            'extra': 1,
            't5_free': 16,
            's_n': 15,
            'i_n': 16,
            'total': 16,
            'n': 4,
            'cache_consistent': True,
        },),
        claims=('I(n) = T5-free count',),
        config={'command': 'census', 'n': 4},
    )


def test_json_is_sorted_and_newline_terminated(census_report):
    """Проверяет сортировку ключей JSON и перевод строки в конце."""
    data = report_emit(census_report, 'json')
    assert data.endswith(b'\n')
    record = json.loads(data)
    assert record['rows'][0]['s_n'] == 15
    assert record['config'] == {'command': 'census', 'n': 4}
    assert list(record) == sorted(record)


def test_csv_uses_fixed_column_order(census_report):
    """Проверяет фиксированный порядок колонок CSV."""
    lines = report_emit(census_report, 'csv').decode('utf-8').splitlines()
    assert lines[0] == (
        'n,total,i_n,s_n,extra,t5_free,max_t5_free_edges,version,cache_consistent'
    )
    assert lines[1] == '4,16,16,15,1,16,4,1.0.0,true'


def test_text_lists_claims_and_config(census_report):
    """Проверяет строки kind, claim и config в текстовом отчёте."""
    text = report_emit(census_report, 'text').decode('utf-8')
    lines = text.splitlines()
    assert lines[0] == 'kind: census'
    assert 'claim: I(n) = T5-free count' in lines
    assert 'config.n: 4' in lines
    assert '[0]' in lines
    assert 'i_n: 16' in lines


def test_emit_is_deterministic(census_report):
    """Проверяет побайтное совпадение повторной выдачи."""
    for fmt in ('json', 'csv', 'text'):
        assert report_emit(census_report, fmt) == report_emit(census_report, fmt)


def test_nested_values_are_flattened_in_text():
    """Проверяет разворачивание вложенных значений в текстовом отчёте."""
    report = Report('check', ({'flags': {'c2': False, 'c1': True}, 'witness': None},))
    lines = report_emit(report, 'text').decode('utf-8').splitlines()
    assert lines[1:] == ['[0]', 'flags.c1: true', 'flags.c2: false', 'witness: ']


def test_unknown_format_is_rejected(census_report):
    """Проверяет отказ на неизвестном формате."""
    with pytest.raises(InvalidArgumentError):
        report_emit(census_report, 'xml')

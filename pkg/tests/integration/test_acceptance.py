from __future__ import annotations

import logging

import pytest

from src.acceptance import CRITERIA, criterion, run_acceptance
from src.errors import InvalidArgumentError

pytestmark = [pytest.mark.integration]


def test_registry_holds_twelve_criteria():
    """Проверяет, что в реестре двенадцать проверок и одна статистическая."""
    assert sorted(CRITERIA) == list(range(1, 13))
    assert [c.number for c in CRITERIA.values() if c.suite == 'statistical'] == [10]


def test_duplicate_registration_is_rejected():
    """Проверяет отказ на повторной регистрации номера."""
    with pytest.raises(InvalidArgumentError):
        criterion(1, 'again', 'primary', 'duplicate')(lambda ctx: (True, {}))


@pytest.mark.parametrize('number', [1, 5, 8, 12])
def test_quick_criteria_pass(number):
    """Проверяет прохождение быстрых приёмочных проверок."""
    (outcome,) = run_acceptance('primary', numbers=[number])
    assert outcome.number == number
    assert outcome.passed, outcome.detail


def test_statistical_suite_excludes_primary():
    """Проверяет, что статистический набор не запускает основные проверки."""
    assert run_acceptance('statistical', numbers=[5]) == []


def test_unknown_suite_is_rejected():
    """Проверяет отказ на неизвестном наборе."""
    with pytest.raises(InvalidArgumentError):
        run_acceptance('nightly')


@pytest.mark.logging
def test_outcomes_are_logged(caplog):
    """Проверяет запись итога проверки в лог."""
    caplog.set_level(logging.INFO, logger='src.acceptance')
    run_acceptance('primary', numbers=[5])
    messages = [r.getMessage() for r in caplog.records]
    assert 'Acceptance 5 (b3-argmax): PASS' in messages


@pytest.mark.slow
def test_full_primary_suite_passes():
    """Проверяет прохождение всего основного набора."""
    outcomes = run_acceptance('primary', workers=2)
    failed = {o.number: o.detail for o in outcomes if not o.passed}
    assert not failed
    assert len(outcomes) == 11


@pytest.mark.slow
@pytest.mark.statistical
def test_triangle_criterion_passes():
    """Проверяет статистическую проверку треугольников."""
    (outcome,) = run_acceptance('statistical')
    assert outcome.passed, outcome.detail


@pytest.mark.slow
def test_census_criterion_runs_every_worker_count():
    """Проверяет, что перепись сверяется на 1, 2, 4 и 8 процессах при каждом n."""
    (outcome,) = run_acceptance('primary', numbers=[2])
    assert outcome.passed, outcome.detail
    for n in ('4', '5', '6'):
        assert outcome.detail[n]['workers'] == [1, 2, 4, 8]
        assert outcome.detail[n]['agree']

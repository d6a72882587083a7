"""Acceptance gate: every criterion at its documented scale and tolerance.

Heavy eigenvalue pools are shared through a module-scoped cache, so the
whole gate runs in a few minutes.  Set KBRG_TEST_THREADS to parallelise the
per-trial sampling on multi-core machines (results are identical).
"""

import os

import pytest

from kbrg import acceptance

THREADS = int(os.environ.get("KBRG_TEST_THREADS", "1"))


@pytest.fixture(scope="module")
def cache():
    return acceptance.SampleCache(threads=THREADS)


def _check(result):
    print(result.line())
    assert result.passed, result.details


def test_criterion_1_combinatorics(cache):
    _check(acceptance.criterion_combinatorics(cache))


def test_criterion_2_second_moment(cache):
    _check(acceptance.criterion_second_moment(cache))


def test_criterion_3_moment_consistency(cache):
    _check(acceptance.criterion_moment_consistency(cache))


def test_criterion_4_free_convolution(cache):
    _check(acceptance.criterion_free_convolution(cache))


def test_criterion_5_tail_exponent(cache):
    _check(acceptance.criterion_tail(cache))


def test_criterion_6_gaussianization_ladder(cache):
    _check(acceptance.criterion_gaussianization(cache))


def test_criterion_7_stieltjes_solver(cache):
    _check(acceptance.criterion_stieltjes(cache))


def test_criterion_8_contraction(cache):
    _check(acceptance.criterion_contraction(cache))


def test_criterion_9_determinism(cache):
    _check(acceptance.criterion_determinism(cache))

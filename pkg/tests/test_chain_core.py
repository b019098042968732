"""
連鎖の基本構造のテスト
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import NegativeEntry, NonFiniteEntry, NotIrreducible, NotSquare, RowSumViolation
from src.markov.chain_core import (
    TransitionMatrix,
    classify,
    is_irreducible,
    matrix_power,
    positive_digraph,
    spectrum,
    stationary,
    validate_stochastic,
)
from tests.helpers import period_cycle, random_chains, random_reversible_chain, two_state


def test_validate_accepts_fixture():
    P = validate_stochastic([[0.7, 0.3], [0.5, 0.5]])
    assert P.m == 2
    assert_allclose(P.entries.sum(axis=1), 1.0, atol=1e-15)


def test_validate_renormalizes_within_tolerance():
    P = validate_stochastic([[0.7, 0.3 + 5e-13], [0.5, 0.5]])
    assert abs(P.entries[0].sum() - 1.0) < 1e-15


def test_validate_reports_worst_row():
    with pytest.raises(RowSumViolation) as info:
        validate_stochastic([[0.7, 0.3], [0.5, 0.6]])
    assert info.value.worst_row == 1
    assert info.value.residual == pytest.approx(0.1)
    assert info.value.exit_code == 2


@pytest.mark.parametrize('raw, error', [
    ([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0]], NotSquare),
    ([[1.0]], NotSquare),
    ([[np.nan, 1.0], [0.5, 0.5]], NonFiniteEntry),
    ([[1.1, -0.1], [0.5, 0.5]], NegativeEntry),
])
def test_validate_rejects(raw, error):
    with pytest.raises(error):
        validate_stochastic(raw)


def test_transition_matrix_is_read_only(fixture_chain):
    with pytest.raises(ValueError):
        fixture_chain.entries[0, 0] = 0.0


def test_stationary_fixture(fixture_chain):
    assert_allclose(stationary(fixture_chain).entries, [0.625, 0.375], atol=1e-15)


def test_stationary_periodic_cycle_is_uniform():
    assert_allclose(stationary(period_cycle(3)).entries, [1 / 3] * 3, atol=1e-14)


def test_stationary_reducible_raises():
    with pytest.raises(NotIrreducible):
        stationary(TransitionMatrix(np.eye(2)))


def test_stationary_random_chains_residual():
    for P in random_chains(seed=1, count=100):
        pi = stationary(P).entries
        assert pi.min() >= 0.0
        assert abs(pi.sum() - 1.0) < 1e-12
        assert np.max(np.abs(pi @ P.entries - pi)) < 1e-10


def test_classify_examples():
    cycle = classify(period_cycle(3))
    assert cycle.irreducible and cycle.period == 3 and not cycle.regular

    alternating = classify(two_state(1.0, 1.0))
    assert alternating.period == 2 and alternating.reversible

    fixture = classify(two_state(0.3, 0.5))
    assert fixture.to_dict() == {'irreducible': True, 'period': 1, 'reversible': True, 'regular': True}

    identity = classify(TransitionMatrix(np.eye(3)))
    assert not identity.irreducible and not identity.reversible


def test_classify_directed_cycle_is_not_reversible():
    assert not classify(period_cycle(4)).reversible


def test_classify_reversible_from_conductances(rng):
    for _ in range(10):
        assert classify(random_reversible_chain(rng, int(rng.integers(2, 8)))).reversible


def test_positive_digraph_edges(fixture_chain):
    graph = positive_digraph(TransitionMatrix([[0.0, 1.0], [0.5, 0.5]]))
    assert set(graph.edges()) == {(0, 1), (1, 0), (1, 1)}
    assert is_irreducible(fixture_chain)


def test_spectrum_fixture(fixture_chain):
    spec = spectrum(fixture_chain)
    assert_allclose(spec.eigenvalues.real, [1.0, 0.2], atol=1e-12)
    assert spec.slem == pytest.approx(0.2)
    assert spec.lambda2 == pytest.approx(0.2)


def test_spectrum_cycle_has_conjugate_pairs():
    spec = spectrum(period_cycle(3))
    assert spec.eigenvalues[0] == pytest.approx(1.0)
    assert spec.slem == pytest.approx(1.0)
    assert abs(spec.eigenvalues[1] - np.conj(spec.eigenvalues[2])) < 1e-12


def test_spectrum_alternating_chain():
    spec = spectrum(two_state(1.0, 1.0))
    assert_allclose(spec.eigenvalues.real, [1.0, -1.0], atol=1e-12)
    assert spec.slem == pytest.approx(1.0)


def test_matrix_power(fixture_chain):
    assert_allclose(matrix_power(fixture_chain, 2), fixture_chain.entries @ fixture_chain.entries)
    assert_allclose(matrix_power(fixture_chain, 0), np.eye(2))


def test_matrix_powers_stay_stochastic():
    for P in random_chains(seed=5, count=25):
        for n in range(1, 7):
            assert np.max(np.abs(matrix_power(P, n).sum(axis=1) - 1.0)) < 1e-10


def test_classify_matches_detailed_balance_by_pairs(rng):
    chains = list(random_chains(seed=6, count=20))
    chains += [random_reversible_chain(rng, int(rng.integers(2, 8))) for _ in range(20)]
    for P in chains:
        pi = stationary(P).entries
        p = P.entries
        balanced = all(
            abs(pi[i] * p[i, j] - pi[j] * p[j, i]) <= 1e-10
            for i in range(P.m) for j in range(P.m)
        )
        assert classify(P).reversible == balanced


def test_spectrum_sum_is_trace():
    for P in random_chains(seed=7, count=50):
        spec = spectrum(P)
        assert abs(spec.eigenvalues.sum() - np.trace(P.entries)) < 1e-8
        at_one = np.abs(spec.eigenvalues - 1.0) < 1e-9
        assert at_one.sum() == 1 and at_one[0]
        assert np.all(np.abs(spec.eigenvalues) <= 1 + 1e-9)


def test_spectrum_four_cycle_random_walk():
    # 無向 4-閉路: 固有値は cos(2πk/4)
    P = TransitionMatrix((np.roll(np.eye(4), 1, axis=1) + np.roll(np.eye(4), -1, axis=1)) / 2)
    spec = spectrum(P)
    assert_allclose(np.sort(spec.eigenvalues.real), [-1.0, 0.0, 0.0, 1.0], atol=1e-12)
    assert_allclose(spec.eigenvalues.imag, 0.0, atol=1e-12)
    assert spec.eigenvalues[0] == pytest.approx(1.0)
    assert spec.slem == pytest.approx(1.0)

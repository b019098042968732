"""
閉形式カタログのテスト
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import DegenerateParameters, Reducible, UnknownName
from src.markov.catalog import (
    CanonicalChain,
    ThreeStateParams,
    TwoStateParams,
    canonical_chain,
    constant_movement_kemeny,
    constant_movement_params,
    three_state_closed_forms,
    two_state_closed_forms,
)
from src.markov.chain_core import stationary
from src.markov.kemeny import kemeny_constant
from src.markov.passage import mfpt_direct


def _random_three_state(rng: np.random.Generator) -> ThreeStateParams:
    rows = []
    for _ in range(3):
        total = rng.uniform(0.05, 1.0)
        share = rng.uniform(0.0, 1.0)
        rows.append((total * share, total * (1.0 - share)))
    (p2, p3), (q1, q3), (r1, r2) = rows
    return ThreeStateParams(p2=p2, p3=p3, q1=q1, q3=q3, r1=r1, r2=r2)


def test_two_state_fixture():
    forms = two_state_closed_forms(TwoStateParams(0.3, 0.5))
    assert forms.K == pytest.approx(2.25)
    assert_allclose(forms.pi, [0.625, 0.375])
    assert_allclose(forms.M, [[1.6, 1 / 0.3], [2.0, 0.8 / 0.3]])


@pytest.mark.parametrize('a, b, K', [(1.0, 1.0, 1.5), (0.3, 0.7, 2.0), (0.9, 0.1, 2.0)])
def test_two_state_special_values(a, b, K):
    assert two_state_closed_forms(TwoStateParams(a, b)).K == pytest.approx(K)


def test_two_state_matches_pipeline_on_grid():
    grid = np.round(np.arange(0.1, 1.01, 0.1), 10)
    for a in grid:
        for b in grid:
            params = TwoStateParams(float(a), float(b))
            forms = two_state_closed_forms(params)
            P = params.transition_matrix()
            assert_allclose(stationary(P).entries, forms.pi, atol=1e-9)
            assert_allclose(mfpt_direct(P).entries, forms.M, rtol=1e-9)
            assert kemeny_constant(P) == pytest.approx(forms.K, abs=1e-9)
            assert forms.K >= 1.5


def test_two_state_slow_chain_has_large_K():
    assert two_state_closed_forms(TwoStateParams(1e-6, 1e-6)).K > 1e5


def test_two_state_reducible_and_invalid():
    assert not TwoStateParams(0.0, 0.5).irreducible
    with pytest.raises(Reducible):
        two_state_closed_forms(TwoStateParams(0.0, 0.0))
    with pytest.raises(DegenerateParameters):
        TwoStateParams(1.5, 0.2)


def test_three_state_cycle():
    forms = three_state_closed_forms(ThreeStateParams(p2=1.0, p3=0.0, q1=0.0, q3=1.0, r1=1.0, r2=0.0))
    assert forms.K == pytest.approx(2.0)
    assert_allclose(forms.pi, [1 / 3] * 3)
    assert_allclose(forms.M, [[3, 1, 2], [2, 3, 1], [1, 2, 3]])


def test_three_state_period_two():
    params = ThreeStateParams(p2=1.0, p3=0.0, q1=0.5, q3=0.5, r1=0.0, r2=1.0)
    assert three_state_closed_forms(params).K == pytest.approx(2.5)
    assert kemeny_constant(params.transition_matrix()) == pytest.approx(2.5)


def test_three_state_matches_pipeline(rng):
    for _ in range(50):
        params = _random_three_state(rng)
        if not params.irreducible:
            continue
        forms = three_state_closed_forms(params)
        P = params.transition_matrix()
        assert_allclose(stationary(P).entries, forms.pi, atol=1e-9)
        assert_allclose(mfpt_direct(P).entries, forms.M, rtol=1e-8)
        assert kemeny_constant(P) == pytest.approx(forms.K, rel=1e-9)
        assert forms.K >= 2.0 - 1e-12


def test_three_state_reducible():
    params = ThreeStateParams(p2=1.0, p3=0.0, q1=1.0, q3=0.0, r1=0.5, r2=0.5)
    assert not params.irreducible
    with pytest.raises(Reducible):
        three_state_closed_forms(params)


def test_three_state_rejects_bad_rows():
    with pytest.raises(DegenerateParameters):
        ThreeStateParams(p2=0.0, p3=0.0, q1=0.5, q3=0.5, r1=0.5, r2=0.5)
    with pytest.raises(DegenerateParameters):
        ThreeStateParams(p2=0.7, p3=0.6, q1=0.5, q3=0.5, r1=0.5, r2=0.5)


def test_constant_movement_family(rng):
    for _ in range(50):
        params = constant_movement_params(*rng.uniform(0.0, 1.0, 3))
        if not params.irreducible:
            continue
        K = constant_movement_kemeny(params)
        assert 2.0 - 1e-12 <= K <= 2.5 + 1e-12
        assert three_state_closed_forms(params).K == pytest.approx(K)


@pytest.mark.parametrize('name, m, K', [
    ('period-cycle', 4, 2.5),
    (CanonicalChain.INDEPENDENT_UNIFORM, 5, 5.0),
    ('period-cycle', 2, 1.5),
])
def test_canonical_chains(name, m, K):
    assert kemeny_constant(canonical_chain(name, m)) == pytest.approx(K)


def test_canonical_chain_errors():
    with pytest.raises(UnknownName):
        canonical_chain('birth-death', 4)
    with pytest.raises(DegenerateParameters):
        canonical_chain('period-cycle', 1)

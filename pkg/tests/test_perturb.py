"""
摂動のテスト
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import (
    BoundViolation,
    DimensionMismatch,
    InvalidPerturbation,
    NotPSD,
    NotStochasticAfterPerturbation,
    NotSymmetricBase,
    PreconditionViolated,
)
from src.markov import perturb
from src.markov.chain_core import TransitionMatrix, is_irreducible
from src.markov.kemeny import kemeny_constant
from src.markov.perturb import (
    Perturbation,
    PerturbationKind,
    apply_perturbation,
    l1_bound_check,
    monotonicity_checks,
    perturbation_matrix,
    random_admissible_perturbation,
    type1_analysis,
    type2_invariance,
)
from tests.helpers import period_cycle, random_chains, random_irreducible_chain, random_reversible_chain, two_state

SYMMETRIC_3 = TransitionMatrix([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]])


def test_type2_fixture(fixture_chain):
    P_bar = apply_perturbation(fixture_chain, Perturbation.type2([0.1, -0.1]))
    assert_allclose(P_bar.entries, [[0.8, 0.2], [0.6, 0.4]], atol=1e-15)
    result = type2_invariance(fixture_chain, [0.1, -0.1])
    assert result['K'] == pytest.approx(2.25)
    assert result['K_bar'] == pytest.approx(2.25, abs=1e-12)


def test_type2_zero_vector_is_identity(fixture_chain):
    result = type2_invariance(fixture_chain, [0.0, 0.0])
    assert result['K'] == result['K_bar']


def test_damping_fixture(fixture_chain):
    pert = Perturbation.damping(0.5, [0.5, 0.5])
    P_bar = apply_perturbation(fixture_chain, pert)
    assert_allclose(P_bar.entries, [[0.6, 0.4], [0.5, 0.5]], atol=1e-15)
    assert_allclose(pert.matrix_for(fixture_chain), P_bar.entries - fixture_chain.entries, atol=1e-15)

    report = l1_bound_check(fixture_chain, P_bar)
    assert report.K_bar == pytest.approx(1 + 1 / 0.9)
    assert report.holds

    mono = monotonicity_checks(fixture_chain, pert)
    assert mono.k_holds
    assert mono.K_bar == pytest.approx(2.111111111111111)


def test_damping_alpha_one_changes_nothing(fixture_chain):
    mono = monotonicity_checks(fixture_chain, Perturbation.damping(1.0, [0.2, 0.8]))
    assert mono.K_bar == pytest.approx(mono.K)


def test_type2_overshoot_is_not_stochastic(fixture_chain):
    with pytest.raises(NotStochasticAfterPerturbation):
        apply_perturbation(fixture_chain, Perturbation.type2([0.5, -0.5]))


def test_l1_bound_fixture(fixture_chain):
    P_bar = two_state(0.35, 0.5)
    report = l1_bound_check(fixture_chain, P_bar)
    assert report.l1_shift == pytest.approx(2 * (0.625 - 10 / 17))
    assert report.l1_shift == pytest.approx(0.0735294117647059)
    assert report.norm_inf == pytest.approx(0.1)
    assert report.bound == pytest.approx(0.125)
    assert report.holds
    assert report.to_dict()['bound_col'] == pytest.approx(1.25 * report.norm_col)


def test_l1_bound_zero_perturbation(fixture_chain):
    report = l1_bound_check(fixture_chain, fixture_chain)
    assert report.l1_shift == 0.0
    assert report.bound == 0.0
    assert report.holds


@pytest.mark.parametrize('kind, seed', [
    (PerturbationKind.GENERAL, 1),
    (PerturbationKind.TYPE1, 2),
    (PerturbationKind.TYPE2, 3),
    (PerturbationKind.DAMPING, 4),
])
def test_l1_bound_random_pairs(kind, seed):
    rng = np.random.default_rng(seed)
    for P in random_chains(seed=41, count=100, m_range=(2, 8)):
        pert = random_admissible_perturbation(P, kind, rng)
        P_bar = apply_perturbation(P, pert)
        report = l1_bound_check(P, P_bar)
        assert report.holds, (kind, report)


def test_l1_bound_random_psd_pairs(rng):
    for _ in range(100):
        P = random_reversible_chain(rng, int(rng.integers(2, 9)))
        symmetric = TransitionMatrix(_symmetrize(P.entries))
        pert = random_admissible_perturbation(symmetric, PerturbationKind.PSD_SUBTRACT, rng)
        assert l1_bound_check(symmetric, apply_perturbation(symmetric, pert)).holds


def _symmetrize(P: np.ndarray) -> np.ndarray:
    # 対称な確率行列 (Metropolis 型)
    S = np.minimum(P, P.T) / P.shape[0]
    np.fill_diagonal(S, 0.0)
    np.fill_diagonal(S, 1.0 - S.sum(axis=1))
    return S


def test_type2_invariance_random(rng):
    for P in random_chains(seed=42, count=100, m_range=(2, 8)):
        pert = random_admissible_perturbation(P, PerturbationKind.TYPE2, rng)
        result = type2_invariance(P, pert.h)
        assert abs(result['K'] - result['K_bar']) < 1e-9 * max(1.0, result['K'])


def test_type1_fixture(fixture_chain):
    report = type1_analysis(fixture_chain, 0, [-0.05, 0.05])
    assert report.max_unchanged_delta < 1e-12
    assert report.K_bar == pytest.approx(1 + 1 / 0.85)
    assert report.predictor == pytest.approx(0.0735294117647059)
    assert report.predictor == pytest.approx(report.K - report.K_bar)
    assert report.predictor_consistent
    assert report.sign_equivalence_holds


def test_type1_zero_vector(fixture_chain):
    report = type1_analysis(fixture_chain, 0, [0.0, 0.0])
    assert report.max_unchanged_delta == 0.0
    assert report.predictor == 0.0
    assert report.K_bar == pytest.approx(report.K)
    assert report.to_dict()['sign_violations'] == []


def test_type1_unchanged_column_random(rng):
    for _ in range(100):
        P = random_irreducible_chain(rng, int(rng.integers(2, 8)))
        pert = random_admissible_perturbation(P, PerturbationKind.TYPE1, rng)
        report = type1_analysis(P, pert.r, pert.h)
        assert report.max_unchanged_delta < 1e-8
        if abs(report.K - report.K_bar) > 1e-7:
            assert report.predictor_consistent, report.to_dict()


def test_psd_subtraction_example():
    q = np.array([1.0, -1.0, 0.0])
    pert = Perturbation.psd_subtract(0.1 * np.outer(q, q))
    P_bar = apply_perturbation(SYMMETRIC_3, pert)
    assert_allclose(P_bar.entries, [[0.4, 0.35, 0.25], [0.35, 0.4, 0.25], [0.25, 0.25, 0.5]], atol=1e-15)

    report = monotonicity_checks(SYMMETRIC_3, pert)
    assert report.K == pytest.approx(1 + 2 / 0.75)
    assert report.K_bar == pytest.approx(1 + 1 / 0.95 + 1 / 0.75)
    assert report.k_holds and report.row_sums_hold


def test_psd_requires_symmetric_base(fixture_chain):
    q = np.array([1.0, -1.0])
    with pytest.raises(NotSymmetricBase):
        apply_perturbation(fixture_chain, Perturbation.psd_subtract(0.1 * np.outer(q, q)))


def test_psd_rejects_indefinite_matrix():
    with pytest.raises(NotPSD):
        Perturbation.psd_subtract([[0.0, 0.1, -0.1], [0.1, 0.0, -0.1], [-0.1, -0.1, 0.2]])
    with pytest.raises(NotPSD):
        Perturbation.psd_subtract([[0.1, -0.1], [0.0, 0.0]])


def test_psd_monotonicity_random(rng):
    for _ in range(40):
        P = TransitionMatrix(_symmetrize(random_reversible_chain(rng, int(rng.integers(2, 7))).entries))
        pert = random_admissible_perturbation(P, PerturbationKind.PSD_SUBTRACT, rng)
        report = monotonicity_checks(P, pert)
        assert report.k_holds and report.row_sums_hold


def test_damping_monotone_on_lazy_reversible_chains(rng):
    # 固有値が非負なら α を下げるほど K̄ は小さくなる
    for _ in range(10):
        P = random_reversible_chain(rng, int(rng.integers(2, 7)))
        lazy = TransitionMatrix((np.eye(P.m) + P.entries) / 2)
        v = rng.dirichlet(np.ones(P.m))
        values = [
            monotonicity_checks(lazy, Perturbation.damping(alpha, v)).K_bar
            for alpha in np.linspace(1.0, 0.1, 10)
        ]
        assert all(later <= earlier + 1e-9 for earlier, later in zip(values, values[1:]))
        assert values[0] == pytest.approx(kemeny_constant(lazy))


def test_damping_can_increase_K_on_periodic_chain():
    report = monotonicity_checks(period_cycle(4), Perturbation.damping(0.5, np.full(4, 0.25)))
    assert report.K == pytest.approx(2.5)
    assert report.K_bar == pytest.approx(1 + 1 / 1.5 + 2 / 1.25)
    assert not report.k_holds
    assert report.notes


def test_monotonicity_rejects_other_kinds(fixture_chain):
    with pytest.raises(PreconditionViolated):
        monotonicity_checks(fixture_chain, Perturbation.type2([0.1, -0.1]))


def test_psd_violation_raises_bound_violation(monkeypatch):
    q = np.array([1.0, -1.0, 0.0])
    pert = Perturbation.psd_subtract(0.1 * np.outer(q, q))
    original = perturb._chain_summary
    calls = []

    def swapped(P):
        calls.append(P)
        # 2 回目 (摂動後) に元の連鎖より大きい K を返させる
        pi, K, M = original(P)
        return (pi, K + 1.0, M) if len(calls) == 2 else (pi, K, M)

    monkeypatch.setattr(perturb, '_chain_summary', swapped)
    with pytest.raises(BoundViolation):
        monotonicity_checks(SYMMETRIC_3, pert)


def test_perturbation_constructors_validate():
    with pytest.raises(InvalidPerturbation):
        Perturbation.type2([0.1, 0.1])
    with pytest.raises(InvalidPerturbation):
        Perturbation.general([[0.1, 0.0], [0.0, 0.0]])
    with pytest.raises(InvalidPerturbation):
        Perturbation.damping(1.5, [0.5, 0.5])
    with pytest.raises(InvalidPerturbation):
        Perturbation.damping(0.5, [1.0, 0.0])
    with pytest.raises(DimensionMismatch):
        Perturbation.damping(0.5, [0.5, 0.5]).matrix_for(SYMMETRIC_3)


def test_perturbation_describe():
    pert = Perturbation.type1(1, [0.1, -0.1, 0.0])
    assert pert.describe() == {'kind': 'type1', 'r': 1, 'h': [0.1, -0.1, 0.0]}
    assert_allclose(pert.E, [[0, 0, 0], [0.1, -0.1, 0.0], [0, 0, 0]])


def test_perturbation_matrix_shape_check(fixture_chain):
    with pytest.raises(DimensionMismatch):
        perturbation_matrix(fixture_chain, SYMMETRIC_3)


def test_random_admissible_perturbations_are_irreducible(rng):
    P = random_irreducible_chain(rng, 5)
    for kind in (PerturbationKind.GENERAL, PerturbationKind.TYPE1, PerturbationKind.TYPE2,
                 PerturbationKind.DAMPING):
        pert = random_admissible_perturbation(P, kind, rng)
        assert pert.kind is kind
        assert is_irreducible(apply_perturbation(P, pert))

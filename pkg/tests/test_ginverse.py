"""
g-inverse のテスト
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import DegenerateParameters, DimensionMismatch, Inconsistent
from src.markov.chain_core import TransitionMatrix, spectrum, stationary
from src.markov.ginverse import (
    GInverseKind,
    fundamental_matrix,
    ginverse_solve,
    group_inverse,
    group_inverse_axioms,
    meyer_leading_block,
    parametric_ginverse,
    verify_ginverse,
)
from src.markov.passage import mfpt_direct
from tests.helpers import period_cycle, random_chains


def test_fundamental_matrix_fixture(fixture_chain):
    pi = stationary(fixture_chain)
    Z = fundamental_matrix(fixture_chain, pi)
    assert Z.kind is GInverseKind.FUNDAMENTAL
    assert Z.ge_constant == 1.0
    assert_allclose(Z.matrix, [[1.09375, -0.09375], [-0.15625, 1.15625]], atol=1e-14)
    assert np.trace(Z.matrix) == pytest.approx(2.25)


def test_group_inverse_fixture(fixture_chain):
    pi = stationary(fixture_chain)
    Ash = group_inverse(fixture_chain, pi)
    assert Ash.ge_constant == 0.0
    assert_allclose(Ash.matrix, np.array([[0.3, -0.3], [-0.5, 0.5]]) / 0.64, atol=1e-14)


def test_every_kind_is_a_ginverse():
    rng = np.random.default_rng(7)
    for P in random_chains(seed=2, count=100):
        pi = stationary(P)
        m = P.m
        candidates = [fundamental_matrix(P, pi), group_inverse(P, pi)]
        candidates += [
            parametric_ginverse(P, pi, rng.uniform(0.5, 1.5, m), rng.uniform(0.5, 1.5, m),
                                rng.normal(size=m), rng.normal(size=m))
            for _ in range(20)
        ]
        for G in candidates:
            check = verify_ginverse(P, G)
            assert check.passed, (G.kind, check.residual)


def test_group_inverse_axioms_on_random_chains():
    for P in random_chains(seed=3, count=20):
        residuals = group_inverse_axioms(P, group_inverse(P, stationary(P)))
        assert max(residuals.values()) < 1e-9


def test_parametric_detects_ge_constant(fixture_chain):
    pi = stationary(fixture_chain)
    e = np.ones(2)
    G = parametric_ginverse(fixture_chain, pi, e, pi.entries, np.zeros(2), np.zeros(2))
    # t = e, u = π のとき Z そのもの
    assert G.ge_constant == pytest.approx(1.0)
    assert_allclose(G.matrix, fundamental_matrix(fixture_chain, pi).matrix, atol=1e-13)


def test_parametric_rejects_degenerate_parameters(fixture_chain):
    pi = stationary(fixture_chain)
    with pytest.raises(DegenerateParameters):
        parametric_ginverse(fixture_chain, pi, [0.375, -0.625], [1.0, 1.0], [0, 0], [0, 0])
    with pytest.raises(DegenerateParameters):
        parametric_ginverse(fixture_chain, pi, [1.0, 1.0], [1.0, -1.0], [0, 0], [0, 0])


def test_verify_rejects_wrong_shape(fixture_chain):
    with pytest.raises(DimensionMismatch):
        verify_ginverse(fixture_chain, np.eye(3))


def test_verify_zero_matrix_is_not_a_ginverse():
    P = period_cycle(3)
    assert not verify_ginverse(P, np.zeros((3, 3))).passed


def test_meyer_leading_block_matches_group_inverse():
    for P in random_chains(seed=4, count=15, m_range=(3, 7)):
        pi = stationary(P)
        Ash = group_inverse(P, pi).matrix
        assert_allclose(meyer_leading_block(P, pi), Ash[:-1, :-1], atol=1e-9)


def test_ginverse_solve_consistent_system(fixture_chain):
    pi = stationary(fixture_chain)
    A = np.eye(2) - fixture_chain.entries
    Z = fundamental_matrix(fixture_chain, pi)
    rhs = A @ np.array([1.0, -2.0])
    result = ginverse_solve(A, Z, rhs)
    assert result.consistent
    assert_allclose(A @ result.require(), rhs, atol=1e-12)


def test_ginverse_solve_inconsistent_system(fixture_chain):
    pi = stationary(fixture_chain)
    A = np.eye(2) - fixture_chain.entries
    Z = fundamental_matrix(fixture_chain, pi)
    result = ginverse_solve(A, Z, np.ones(2))
    assert not result.consistent
    with pytest.raises(Inconsistent):
        result.require()
    with pytest.raises(Inconsistent):
        ginverse_solve(A, Z, np.ones(2), strict=True)


def nearly_decoupled(eps: float) -> TransitionMatrix:
    # 両端の状態がほぼ吸収的: K = 1 + 1/ε + 1/(1 + ε)
    return TransitionMatrix([[1 - eps, eps, 0.0], [0.5, 0.0, 0.5], [0.0, eps, 1 - eps]])


@pytest.mark.parametrize('eps', [1e-5, 1e-6, 1e-7])
def test_nearly_decoupled_chain_is_accepted(eps):
    P = nearly_decoupled(eps)
    pi = stationary(P)
    assert_allclose(pi.entries, np.array([1.0, 2 * eps, 1.0]) / (2 + 2 * eps), rtol=1e-6, atol=1e-14)

    Z = fundamental_matrix(P, pi)
    Ash = group_inverse(P, pi)
    assert np.trace(Z.matrix) == pytest.approx(1 + 1 / eps + 1 / (1 + eps), rel=1e-7)
    assert np.trace(Ash.matrix) == pytest.approx(1 / eps + 1 / (1 + eps), rel=1e-7)
    assert verify_ginverse(P, Z).passed
    assert verify_ginverse(P, Ash).passed
    # 相対残差は条件数 1/ε に比例する
    assert max(group_inverse_axioms(P, Ash).values()) < 1e3 * np.finfo(float).eps / eps


def test_fundamental_matrix_eigenvalues():
    for P in random_chains(seed=5, count=40):
        values = np.linalg.eigvals(fundamental_matrix(P, stationary(P)).matrix)
        lam = spectrum(P).eigenvalues
        expected = np.concatenate([[1.0], 1.0 / (1.0 - lam[1:])])
        # 多重集合として照合する
        remaining = list(values)
        for target in expected:
            k = int(np.argmin([abs(z - target) for z in remaining]))
            assert abs(remaining.pop(k) - target) < 1e-7 * max(1.0, abs(target))


def test_ginverse_solve_zero_rhs(fixture_chain):
    pi = stationary(fixture_chain)
    A = np.eye(2) - fixture_chain.entries
    for G in (fundamental_matrix(fixture_chain, pi), group_inverse(fixture_chain, pi)):
        result = ginverse_solve(A, G, np.zeros((2, 3)))
        assert result.consistent
        assert result.residual == 0.0
        assert_allclose(result.require(), np.zeros((2, 3)), atol=0)


def test_ginverse_solve_reproduces_mfpt_columns():
    # (I − P) m_j = e − P e_j / π_j の解は m_j = Z c_j + γ e、γ は m_jj = 1/π_j で決まる
    for P in random_chains(seed=8, count=20):
        pi = stationary(P).entries
        m = P.m
        A = np.eye(m) - P.entries
        Z = fundamental_matrix(P, stationary(P))
        C = np.ones((m, m)) - P.entries / pi[None, :]
        X = ginverse_solve(A, Z, C, strict=True).require()
        M = X + (1.0 / pi - np.diag(X))[None, :]
        assert_allclose(M, mfpt_direct(P).entries, rtol=1e-8, atol=1e-8)

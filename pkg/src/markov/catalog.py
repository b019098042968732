"""
閉形式で解ける連鎖のカタログ
2 状態・3 状態の公式と標準的な m 状態連鎖 (線形代数を使わない独立な参照値)
"""

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from src.core.errors import DegenerateParameters, Reducible, UnknownName
from src.markov.chain_core import TransitionMatrix


@dataclass(frozen=True, eq=False)
class ClosedForms:
    pi: np.ndarray
    M: np.ndarray
    K: float


@dataclass(frozen=True)
class TwoStateParams:
    """P = [[1−a, a], [b, 1−b]]"""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0 and 0.0 <= self.b <= 1.0):
            raise DegenerateParameters(f"0 ≤ a, b ≤ 1 が必要です: a={self.a}, b={self.b}")

    @property
    def d(self) -> float:
        return 1.0 - self.a - self.b

    @property
    def irreducible(self) -> bool:
        # −1 ≤ d < 1 は定常分布の一意性まで。M が有限になるには a, b > 0 が必要
        return self.a > 0.0 and self.b > 0.0

    def transition_matrix(self) -> TransitionMatrix:
        return TransitionMatrix([[1.0 - self.a, self.a], [self.b, 1.0 - self.b]])


@dataclass(frozen=True)
class ThreeStateParams:
    """P = [[1−p₂−p₃, p₂, p₃], [q₁, 1−q₁−q₃, q₃], [r₁, r₂, 1−r₁−r₂]]"""

    p2: float
    p3: float
    q1: float
    q3: float
    r1: float
    r2: float

    def __post_init__(self):
        values = (self.p2, self.p3, self.q1, self.q3, self.r1, self.r2)
        if any(x < 0.0 for x in values):
            raise DegenerateParameters("パラメータは非負が必要です")
        for name, total in (('p₂+p₃', self.p2 + self.p3), ('q₁+q₃', self.q1 + self.q3),
                            ('r₁+r₂', self.r1 + self.r2)):
            if not 0.0 < total <= 1.0 + 1e-15:
                raise DegenerateParameters(f"0 < {name} ≤ 1 が必要です: {total}")

    @property
    def deltas(self) -> np.ndarray:
        p2, p3, q1, q3, r1, r2 = self.p2, self.p3, self.q1, self.q3, self.r1, self.r2
        return np.array([
            q3 * r1 + q1 * r2 + q1 * r1,
            r1 * p2 + r2 * p3 + r2 * p2,
            p2 * q3 + p3 * q1 + p3 * q3,
        ])

    @property
    def delta(self) -> float:
        return float(self.deltas.sum())

    @property
    def tau(self) -> float:
        return self.p2 + self.p3 + self.q1 + self.q3 + self.r1 + self.r2

    def tau_matrix(self) -> np.ndarray:
        """τ_ij (対角は 0)"""
        p2, p3, q1, q3, r1, r2 = self.p2, self.p3, self.q1, self.q3, self.r1, self.r2
        return np.array([
            [0.0, p3 + r1 + r2, p2 + q1 + q3],
            [q3 + r1 + r2, 0.0, q1 + p2 + p3],
            [r2 + q1 + q3, r1 + p2 + p3, 0.0],
        ])

    @property
    def irreducible(self) -> bool:
        return bool(np.all(self.deltas > 0.0))

    def transition_matrix(self) -> TransitionMatrix:
        return TransitionMatrix([
            [1.0 - self.p2 - self.p3, self.p2, self.p3],
            [self.q1, 1.0 - self.q1 - self.q3, self.q3],
            [self.r1, self.r2, 1.0 - self.r1 - self.r2],
        ])


def two_state_closed_forms(params: TwoStateParams) -> ClosedForms:
    """π = (b, a)/(a+b), K = 1 + 1/(a+b)"""
    if not params.irreducible:
        raise Reducible(f"2 状態連鎖が既約ではありません: a={params.a}, b={params.b}")
    a, b, d = params.a, params.b, params.d
    return ClosedForms(
        pi=np.array([b, a]) / (a + b),
        M=np.array([[(1.0 - d) / b, 1.0 / a], [1.0 / b, (1.0 - d) / a]]),
        K=1.0 + 1.0 / (a + b),
    )


def three_state_closed_forms(params: ThreeStateParams) -> ClosedForms:
    """π = (Δ₁, Δ₂, Δ₃)/Δ, m_ij = τ_ij/Δ_j, m_ii = Δ/Δ_i, K = 1 + τ/Δ"""
    if not params.irreducible:
        raise Reducible("3 状態連鎖が既約ではありません", {'deltas': params.deltas.tolist()})

    deltas = params.deltas
    delta = params.delta
    tau_ij = params.tau_matrix()
    row_totals = tau_ij.sum(axis=1)
    if np.max(np.abs(row_totals - params.tau)) > 1e-12:
        raise DegenerateParameters("τ = τ_ij の行和が成り立ちません", {'rows': row_totals.tolist()})

    M = tau_ij / deltas[None, :]
    np.fill_diagonal(M, delta / deltas)
    return ClosedForms(pi=deltas / delta, M=M, K=1.0 + params.tau / delta)


def constant_movement_params(p2: float, q3: float, r1: float) -> ThreeStateParams:
    """p₂+p₃ = q₁+q₃ = r₁+r₂ = 1 (対角が 0) の族"""
    return ThreeStateParams(p2=p2, p3=1.0 - p2, q1=1.0 - q3, q3=q3, r1=r1, r2=1.0 - r1)


def constant_movement_kemeny(params: ThreeStateParams) -> float:
    """K = 1 + 3/(3 − q₃r₂ − r₁p₃ − p₂q₁)"""
    return 1.0 + 3.0 / (3.0 - params.q3 * params.r2 - params.r1 * params.p3 - params.p2 * params.q1)


class CanonicalChain(Enum):
    PERIOD_CYCLE = "period-cycle"
    INDEPENDENT_UNIFORM = "independent-uniform"


def canonical_chain(name: Union[str, CanonicalChain], m: int) -> TransitionMatrix:
    """周期 m の巡回置換、または独立試行 (全行一様)"""
    if not isinstance(name, CanonicalChain):
        try:
            name = CanonicalChain(name)
        except ValueError:
            choices = ', '.join(c.value for c in CanonicalChain)
            raise UnknownName(f"未知の連鎖名: {name} (候補: {choices})", {'name': str(name)}) from None
    if m < 2:
        raise DegenerateParameters(f"状態数は 2 以上が必要です: {m}")

    if name is CanonicalChain.PERIOD_CYCLE:
        return TransitionMatrix(np.roll(np.eye(m), 1, axis=1))
    return TransitionMatrix(np.full((m, m), 1.0 / m))

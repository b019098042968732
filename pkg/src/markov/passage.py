"""
平均初到達時間 (MFPT)
g-inverse 経由と直接解法の 2 経路、および定常分布から出発した到達時間の期待値
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg
import structlog

from src.core.errors import BadStateIndex, NotAGInverse, NotIrreducible, SingularSystem
from src.markov.chain_core import ProbabilityVector, TransitionMatrix, frozen_array, is_irreducible
from src.markov.ginverse import GInverse, verify_ginverse

logger = structlog.get_logger(__name__)


class Convention(Enum):
    """対角成分の規約"""
    CLASSIC = "classic"      # m_ii = 1/π_i (平均再帰時間)
    MODIFIED = "modified"    # m_ii = 0


@dataclass(frozen=True, eq=False)
class MFPTMatrix:
    entries: np.ndarray
    convention: Convention = Convention.CLASSIC

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if self.convention is Convention.MODIFIED:
            np.fill_diagonal(entries, 0.0)
        object.__setattr__(self, 'entries', frozen_array(entries))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def as_modified(self) -> 'MFPTMatrix':
        return MFPTMatrix(self.entries, Convention.MODIFIED)

    def as_convention(self, convention: Convention) -> 'MFPTMatrix':
        if convention is self.convention:
            return self
        if convention is Convention.MODIFIED:
            return self.as_modified()
        raise ValueError("Modified から Classic には戻せません (π が必要です)")


def check_state(j: int, m: int) -> int:
    if not isinstance(j, (int, np.integer)) or not 0 <= j < m:
        raise BadStateIndex(f"状態番号が範囲外です: {j} (0..{m - 1})", {'state': j, 'm': m})
    return int(j)


def mfpt_from_ginverse(P: TransitionMatrix, pi: ProbabilityVector, G: GInverse,
                       tol: Optional[float] = None) -> MFPTMatrix:
    """任意の g-inverse から M を求める

    m_ij = (g_jj − g_ij + δ_ij)/π_j + (g_i· − g_j·)。Ge が定数なら行和の項は消える。
    """
    check = verify_ginverse(P, G, tol)
    if not check.passed:
        raise NotAGInverse(
            f"I − P の g-inverse ではありません (residual={check.residual:.3e})",
            {'residual': check.residual},
        )

    g = G.matrix
    p = pi.entries
    diag = np.diag(g)
    M = (diag[None, :] - g + np.eye(P.m)) / p[None, :]
    if G.ge_constant is None:
        row = g.sum(axis=1)
        M = M + (row[:, None] - row[None, :])

    logger.debug("MFPT を g-inverse から計算", kind=G.kind.value, ge_constant=G.ge_constant)
    return MFPTMatrix(M, Convention.CLASSIC)


def _destination_column(P: np.ndarray, j: int) -> np.ndarray:
    m = P.shape[0]
    others = [k for k in range(m) if k != j]
    system = np.eye(m - 1) - P[np.ix_(others, others)]
    try:
        hitting = scipy.linalg.solve(system, np.ones(m - 1))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(f"状態 {j} への到達方程式が特異です: {exc}") from exc

    column = np.empty(m)
    column[others] = hitting
    column[j] = 1.0 + P[j, others] @ hitting
    return column


def mfpt_direct(P: TransitionMatrix, max_workers: Optional[int] = None) -> MFPTMatrix:
    """目的状態ごとに (I − P_{−j}) m_{·j} = e を解く独立な経路"""
    if not is_irreducible(P):
        raise NotIrreducible("MFPT には既約な連鎖が必要です")

    entries = P.entries
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            columns = list(pool.map(lambda j: _destination_column(entries, j), range(P.m)))
    else:
        columns = [_destination_column(entries, j) for j in range(P.m)]

    return MFPTMatrix(np.column_stack(columns), Convention.CLASSIC)


def mfpt_equation_residual(P: TransitionMatrix, M: MFPTMatrix) -> float:
    """‖(I − P)M − (E − P M_d)‖∞ (Classic 規約)"""
    m = P.m
    Md = np.diag(np.diag(M.entries))
    lhs = (np.eye(m) - P.entries) @ M.entries
    rhs = np.ones((m, m)) - P.entries @ Md
    return float(np.linalg.norm(lhs - rhs, np.inf))


def stationary_hitting_expectation(P: TransitionMatrix, pi: ProbabilityVector,
                                   G: GInverse, j: int) -> float:
    """E(T_j*) = Σ_i π_i m_ij

    = 1 + Σ_i π_i g_i· − g_j· + (g_jj − Σ_i π_i g_ij)/π_j
    """
    j = check_state(j, P.m)
    g = G.matrix
    p = pi.entries
    row = g.sum(axis=1)
    return float(1.0 + p @ row - row[j] + (g[j, j] - p @ g[:, j]) / p[j])


def stationary_hitting_vector(P: TransitionMatrix, pi: ProbabilityVector, G: GInverse) -> np.ndarray:
    return np.array([stationary_hitting_expectation(P, pi, G, j) for j in range(P.m)])


def commute_times(M: MFPTMatrix) -> np.ndarray:
    """m_ij + m_ji (対角は 0)"""
    modified = M.as_modified().entries
    return modified + modified.T

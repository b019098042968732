"""
有限マルコフ連鎖の基本構造
確率行列の検証・構造分類・定常分布・スペクトル
"""

from dataclasses import dataclass
from math import gcd
from typing import Optional

import networkx as nx
import numpy as np
import scipy.linalg
import structlog

from src.config import Config
from src.core.errors import (
    EigenFailure,
    NegativeEntry,
    NonFiniteEntry,
    NotIrreducible,
    NotSquare,
    RowSumViolation,
    SingularSystem,
)

logger = structlog.get_logger(__name__)


def frozen_array(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=array.dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """検証済みの行確率行列 P"""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'entries', frozen_array(np.asarray(self.entries, dtype=float)))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """確率ベクトル (定常分布 π など)"""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'entries', frozen_array(np.asarray(self.entries, dtype=float)))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class ChainStructure:
    """連鎖の構造分類"""

    irreducible: bool
    period: int
    reversible: bool
    regular: bool

    def to_dict(self):
        return {
            'irreducible': self.irreducible,
            'period': self.period,
            'reversible': self.reversible,
            'regular': self.regular,
        }


@dataclass(frozen=True, eq=False)
class SpectrumSummary:
    """P の固有値 (λ₁ = 1 が先頭、以降は実部の降順)"""

    eigenvalues: np.ndarray
    slem: float
    lambda2: float

    def __post_init__(self):
        object.__setattr__(self, 'eigenvalues', frozen_array(np.asarray(self.eigenvalues, dtype=complex)))

    @property
    def m(self) -> int:
        return self.eigenvalues.shape[0]


def validate_stochastic(raw, tol: Optional[float] = None) -> TransitionMatrix:
    """生の行列を検証して TransitionMatrix を返す

    行和のずれが tol 以内なら各行を正規化し、それ以外は RowSumViolation。
    """
    tol = Config.STOCHASTIC_TOL if tol is None else tol
    array = np.array(raw, dtype=float)

    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise NotSquare(f"正方行列ではありません: shape={array.shape}", {'shape': list(array.shape)})
    if array.shape[0] < 2:
        raise NotSquare("状態数は 2 以上が必要です", {'shape': list(array.shape)})
    if not np.all(np.isfinite(array)):
        raise NonFiniteEntry("有限でない要素が含まれています")

    if np.any(array < 0.0):
        i, j = np.argwhere(array < 0.0)[0]
        logger.warning("負の要素を検出", row=int(i), col=int(j), value=float(array[i, j]))
        raise NegativeEntry(
            f"負の要素があります: p[{i},{j}] = {array[i, j]}",
            {'row': int(i), 'col': int(j), 'value': float(array[i, j])},
        )

    row_sums = array.sum(axis=1)
    residuals = np.abs(row_sums - 1.0)
    worst = int(np.argmax(residuals))
    if residuals[worst] > tol:
        logger.warning("行和違反", worst_row=worst, residual=float(residuals[worst]))
        raise RowSumViolation(worst, float(residuals[worst]))

    return TransitionMatrix(array / row_sums[:, None])


def positive_digraph(P: TransitionMatrix, threshold: Optional[float] = None) -> nx.DiGraph:
    """p_ij > threshold の辺からなる有向グラフ D(P)"""
    threshold = Config.ZERO_THRESHOLD if threshold is None else threshold
    graph = nx.DiGraph()
    graph.add_nodes_from(range(P.m))
    rows, cols = np.nonzero(P.entries > threshold)
    graph.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return graph


def is_irreducible(P: TransitionMatrix) -> bool:
    return nx.is_strongly_connected(positive_digraph(P))


def _period(graph: nx.DiGraph, root: int = 0) -> int:
    # BFS レベル差 + 1 の gcd (root を含む強連結成分の中だけで計算)
    component = next(scc for scc in nx.strongly_connected_components(graph) if root in scc)
    sub = graph.subgraph(component)
    level = nx.single_source_shortest_path_length(sub, root)

    period = 0
    for u, v in sub.edges():
        period = gcd(period, level[u] + 1 - level[v])
    # 閉路を持たない成分は周期が定義されないので 1 とする
    return abs(period) or 1


def stationary(P: TransitionMatrix) -> ProbabilityVector:
    """πᵀP = πᵀ, Σπ = 1 を直接解く (周期的な連鎖でも正確)"""
    if not is_irreducible(P):
        raise NotIrreducible("既約でない連鎖には一意な定常分布がありません")

    m = P.m
    system = np.eye(m) - P.entries.T
    system[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0

    try:
        pi = scipy.linalg.solve(system, rhs)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(f"定常方程式が特異です: {exc}") from exc

    if np.any(pi < -1e-12):
        raise SingularSystem("定常分布に負の成分が出ました", {'min': float(pi.min())})
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()

    residual = float(np.max(np.abs(pi @ P.entries - pi)))
    if residual >= 1e-10:
        raise SingularSystem(
            f"定常分布の残差が大きすぎます: {residual:.3e}", {'residual': residual}
        )

    logger.debug("定常分布を計算", m=m, residual=residual)
    return ProbabilityVector(pi)


def classify(P: TransitionMatrix, tol: Optional[float] = None) -> ChainStructure:
    """既約性・周期・可逆性を判定する (可約でもエラーにはしない)"""
    tol = Config.REVERSIBLE_TOL if tol is None else tol
    graph = positive_digraph(P)
    irreducible = nx.is_strongly_connected(graph)
    period = _period(graph)

    reversible = False
    if irreducible:
        pi = stationary(P).entries
        flow = pi[:, None] * P.entries
        reversible = bool(np.all(np.abs(flow - flow.T) <= tol))

    return ChainStructure(
        irreducible=irreducible,
        period=period,
        reversible=reversible,
        regular=irreducible and period == 1,
    )


def _pair_conjugates(values: np.ndarray, tol: float) -> np.ndarray:
    values = np.where(np.abs(values.imag) <= tol, values.real + 0j, values)
    upper = [z for z in values if z.imag > 0]
    lower = [z for z in values if z.imag < 0]
    if len(upper) != len(lower):
        raise EigenFailure("複素固有値が共役対になっていません")

    paired = [z for z in values if z.imag == 0]
    for z in sorted(upper, key=lambda w: (-w.real, -w.imag)):
        k = int(np.argmin([abs(z - np.conj(w)) for w in lower]))
        w = lower.pop(k)
        if abs(z - np.conj(w)) > 1e3 * tol:
            raise EigenFailure("共役対の照合に失敗しました")
        mean = (z + np.conj(w)) / 2
        paired.extend([mean, np.conj(mean)])
    return np.array(paired, dtype=complex)


def spectrum(P: TransitionMatrix, tol: float = 1e-9) -> SpectrumSummary:
    """P の固有値を λ₁ = 1 を先頭に並べて返す"""
    if not is_irreducible(P):
        raise NotIrreducible("スペクトル解析には既約な連鎖が必要です")

    try:
        values = scipy.linalg.eigvals(P.entries)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigenFailure(f"固有値計算が収束しませんでした: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise EigenFailure("固有値に有限でない値があります")

    values = _pair_conjugates(values, tol)
    lead = int(np.argmin(np.abs(values - 1.0)))
    rest = np.delete(values, lead)
    rest = np.array(sorted(rest, key=lambda z: (-z.real, -z.imag)), dtype=complex)
    ordered = np.concatenate([[values[lead]], rest])

    return SpectrumSummary(
        eigenvalues=ordered,
        slem=float(np.max(np.abs(rest))),
        lambda2=float(rest[0].real),
    )


def matrix_power(P: TransitionMatrix, n: int) -> np.ndarray:
    """n ステップ推移行列 Pⁿ"""
    return np.linalg.matrix_power(P.entries, n)

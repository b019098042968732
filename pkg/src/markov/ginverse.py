"""
I − P の一般化逆行列
基本行列 Z・群逆行列 A#・パラメトリック族 G と、それらを使った連立方程式の解法
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
import scipy.linalg
import structlog

from src.config import Config
from src.core.errors import (
    DegenerateParameters,
    DimensionMismatch,
    Inconsistent,
    SingularSystem,
)
from src.markov.chain_core import ProbabilityVector, TransitionMatrix, frozen_array

logger = structlog.get_logger(__name__)


class GInverseKind(Enum):
    """g-inverse の種類"""
    FUNDAMENTAL = "fundamental"
    GROUP = "group"
    PARAMETRIC = "parametric"


@dataclass(frozen=True, eq=False)
class ParametricParams:
    """G = [I − P + tuᵀ]⁻¹ + efᵀ + gπᵀ のパラメータ"""
    t: np.ndarray
    u: np.ndarray
    f: np.ndarray
    g: np.ndarray


@dataclass(frozen=True, eq=False)
class GInverse:
    """A = I − P の one-condition g-inverse と生成情報"""

    matrix: np.ndarray
    kind: GInverseKind
    params: Optional[ParametricParams] = None
    ge_constant: Optional[float] = None
    condition: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'matrix', frozen_array(np.asarray(self.matrix, dtype=float)))

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class GInverseCheck:
    residual: float
    passed: bool


@dataclass(frozen=True, eq=False)
class SolveResult:
    """AX = C の特解 X = A⁻C (W = 0)"""
    solution: Optional[np.ndarray]
    consistent: bool
    residual: float

    def require(self) -> np.ndarray:
        if not self.consistent:
            raise Inconsistent(self.residual)
        return self.solution


def _invert(matrix: np.ndarray) -> np.ndarray:
    # 部分ピボット付き LU + 反復改良 1 回
    m = matrix.shape[0]
    identity = np.eye(m)
    try:
        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=True)
    except (ValueError, np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(f"LU 分解に失敗しました: {exc}") from exc

    pivots = np.abs(np.diag(lu))
    scale = max(float(np.max(np.abs(matrix))), 1.0)
    if pivots.min() <= m * np.finfo(float).eps * scale:
        raise SingularSystem("行列が特異です", {'min_pivot': float(pivots.min())})

    inverse = scipy.linalg.lu_solve((lu, piv), identity)
    inverse += scipy.linalg.lu_solve((lu, piv), identity - matrix @ inverse)
    if not np.all(np.isfinite(inverse)):
        raise SingularSystem("逆行列に有限でない値があります")
    return inverse


def _condition(matrix: np.ndarray, kind: GInverseKind) -> float:
    condition = float(np.linalg.cond(matrix, 1))
    if condition > Config.CONDITION_WARN:
        logger.warning("条件数が大きい", kind=kind.value, condition=condition)
    return condition


def _scale(G: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(G))))


def _detect_ge_constant(G: np.ndarray, tol: float = 1e-9) -> Optional[float]:
    row_sums = G.sum(axis=1)
    if row_sums.max() - row_sums.min() < tol * _scale(G):
        return float(row_sums.mean())
    return None


def _as_array(G: Union[GInverse, np.ndarray]) -> np.ndarray:
    return G.matrix if isinstance(G, GInverse) else np.asarray(G, dtype=float)


def fundamental_matrix(P: TransitionMatrix, pi: ProbabilityVector) -> GInverse:
    """Z = [I − P + eπᵀ]⁻¹"""
    m = P.m
    system = np.eye(m) - P.entries + np.outer(np.ones(m), pi.entries)
    condition = _condition(system, GInverseKind.FUNDAMENTAL)
    Z = _invert(system)
    # 許容誤差は Z の大きさに比例させる
    if np.max(np.abs(Z.sum(axis=1) - 1.0)) > 1e-9 * _scale(Z):
        raise SingularSystem("Ze = e が成り立ちません (π と P が整合していません)")
    return GInverse(Z, GInverseKind.FUNDAMENTAL, ge_constant=1.0, condition=condition)


def group_inverse(P: TransitionMatrix, pi: ProbabilityVector) -> GInverse:
    """A# = Z − eπᵀ"""
    Z = fundamental_matrix(P, pi)
    Ash = Z.matrix - np.outer(np.ones(P.m), pi.entries)
    tol = 1e-9 * _scale(Ash)
    if np.max(np.abs(Ash.sum(axis=1))) > tol or np.max(np.abs(pi.entries @ Ash)) > tol:
        raise SingularSystem("A#e = 0, πᵀA# = 0 が成り立ちません")
    return GInverse(Ash, GInverseKind.GROUP, ge_constant=0.0, condition=Z.condition)


def parametric_ginverse(P: TransitionMatrix, pi: ProbabilityVector, t, u, f, gvec) -> GInverse:
    """G = [I − P + tuᵀ]⁻¹ + efᵀ + gπᵀ"""
    m = P.m
    t, u, f, gvec = (np.asarray(x, dtype=float).reshape(m) for x in (t, u, f, gvec))
    e = np.ones(m)

    pi_t = float(pi.entries @ t)
    u_e = float(u @ e)
    if abs(pi_t) <= 1e-12 or abs(u_e) <= 1e-12:
        raise DegenerateParameters(
            "πᵀt ≠ 0 かつ uᵀe ≠ 0 が必要です", {'pi_t': pi_t, 'u_e': u_e}
        )

    system = np.eye(m) - P.entries + np.outer(t, u)
    condition = _condition(system, GInverseKind.PARAMETRIC)
    G = _invert(system) + np.outer(e, f) + np.outer(gvec, pi.entries)

    return GInverse(
        G,
        GInverseKind.PARAMETRIC,
        params=ParametricParams(t, u, f, gvec),
        ge_constant=_detect_ge_constant(G),
        condition=condition,
    )


def verify_ginverse(P: TransitionMatrix, G: Union[GInverse, np.ndarray],
                    tol: Optional[float] = None) -> GInverseCheck:
    """‖(I−P)G(I−P) − (I−P)‖∞ を返す (判定は tol·max(1, max|g_ij|))"""
    tol = Config.GINVERSE_TOL if tol is None else tol
    matrix = _as_array(G)
    if matrix.shape != P.entries.shape:
        raise DimensionMismatch(
            f"次元が一致しません: {matrix.shape} vs {P.entries.shape}"
        )
    A = np.eye(P.m) - P.entries
    residual = float(np.linalg.norm(A @ matrix @ A - A, np.inf))
    return GInverseCheck(residual=residual, passed=residual < tol * _scale(matrix))


def group_inverse_axioms(P: TransitionMatrix, Ash: Union[GInverse, np.ndarray]) -> dict:
    """群逆行列の 3 条件の残差 (max(1, max|x_ij|) で割った相対値)"""
    A = np.eye(P.m) - P.entries
    X = _as_array(Ash)
    scale = _scale(X)
    return {
        'AXA': float(np.linalg.norm(A @ X @ A - A, np.inf)) / scale,
        'XAX': float(np.linalg.norm(X @ A @ X - X, np.inf)) / scale,
        'commute': float(np.linalg.norm(A @ X - X @ A, np.inf)) / scale,
    }


def meyer_leading_block(P: TransitionMatrix, pi: ProbabilityVector) -> np.ndarray:
    """A# の先頭 (m−1)×(m−1) ブロックを A_m⁻¹ から組み立てる (j = m の場合のみ)"""
    m = P.m
    A_n = (np.eye(m) - P.entries)[:-1, :-1]
    A_inv = _invert(A_n)
    u = pi.entries[:-1]
    e = np.ones(m - 1)
    W = np.outer(e, u)
    beta = float(u @ A_inv @ e)
    return A_inv + beta * W - A_inv @ W - W @ A_inv


def ginverse_solve(A, Aminus, C, tol: Optional[float] = None, strict: bool = False) -> SolveResult:
    """AX = C を g-inverse で解く

    A A⁻ C = C なら X = A⁻C を返す。strict=True なら不整合時に Inconsistent を送出。
    """
    tol = Config.GINVERSE_TOL if tol is None else tol
    A = np.asarray(A, dtype=float)
    Aminus = _as_array(Aminus)
    C = np.asarray(C, dtype=float)
    vector_rhs = C.ndim == 1
    if vector_rhs:
        C = C[:, None]

    if A.shape[0] != A.shape[1] or Aminus.shape != A.shape or C.shape[0] != A.shape[0]:
        raise DimensionMismatch("A, A⁻, C の次元が一致しません")

    residual = float(np.max(np.abs(A @ Aminus @ C - C))) if C.size else 0.0
    if residual >= tol:
        logger.info("不整合な連立方程式", residual=residual)
        if strict:
            raise Inconsistent(residual)
        return SolveResult(solution=None, consistent=False, residual=residual)

    X = Aminus @ C
    return SolveResult(solution=X[:, 0] if vector_rhs else X, consistent=True, residual=residual)

"""
Kemeny 定数
複数の独立な経路による計算・定数性の検証・スペクトル境界
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np
import scipy.linalg
import structlog

from src.config import Config
from src.core.errors import (
    ConstancyViolation,
    EigenFailure,
    EigenvalueAtOneRepeated,
    NotAGInverse,
    NotIrreducible,
    RouteDisagreement,
    SingularSubmatrix,
    WrongKind,
)
from src.markov.chain_core import (
    ChainStructure,
    ProbabilityVector,
    SpectrumSummary,
    TransitionMatrix,
    classify,
    matrix_power,
    spectrum,
    stationary,
)
from src.markov.ginverse import (
    GInverse,
    GInverseKind,
    fundamental_matrix,
    group_inverse,
    parametric_ginverse,
    verify_ginverse,
)
from src.markov.passage import MFPTMatrix, check_state, mfpt_direct

logger = structlog.get_logger(__name__)

ROUTES = (
    'mfpt_rowdot',
    'trace_Z',
    'trace_group',
    'eigenvalue',
    'ginverse_general',
    'submatrix',
)


@dataclass
class KemenyReport:
    """Kemeny 定数と経路ごとの値"""

    K: float
    routes: Dict[str, float]
    spread: float
    modified_K: float
    submatrix_by_state: List[float] = field(default_factory=list)
    surfer_K: Optional[float] = None

    def check(self, m: int, tol: Optional[float] = None) -> None:
        tol = Config.ROUTE_TOL if tol is None else tol
        if self.spread >= tol * max(1.0, self.K):
            raise RouteDisagreement(
                f"経路間の不一致: spread={self.spread:.3e}",
                {'routes': dict(self.routes), 'spread': self.spread},
            )
        if self.K < (m + 1) / 2 - 1e-9:
            raise RouteDisagreement(f"K = {self.K} が下界 (m+1)/2 を下回りました")


@dataclass(frozen=True)
class ConstancyResult:
    k: np.ndarray
    K: float
    max_relative_deviation: float
    fixed_point_residual: Optional[float]


@dataclass
class BoundsReport:
    """Kemeny 定数のスペクトル境界"""

    lower_general: float
    lower_reversible: Optional[float] = None
    lower_levene_loizou: Optional[float] = None
    upper_reversible: Optional[float] = None
    reversible_applicable: bool = False
    upper_applicable: bool = False

    def satisfied(self, K: float, tol: float = 1e-9) -> bool:
        if K < self.lower_general - tol:
            return False
        if self.lower_reversible is not None and K < self.lower_reversible - tol:
            return False
        if self.upper_reversible is not None and K > self.upper_reversible + tol:
            return False
        return True

    def to_dict(self):
        return {
            'lower_general': self.lower_general,
            'lower_reversible': self.lower_reversible,
            'lower_levene_loizou': self.lower_levene_loizou,
            'upper_reversible': self.upper_reversible,
            'reversible_applicable': self.reversible_applicable,
            'upper_applicable': self.upper_applicable,
        }


def kemeny_constancy(M: MFPTMatrix, pi: ProbabilityVector, P: Optional[TransitionMatrix] = None,
                     tol: Optional[float] = None) -> ConstancyResult:
    """K_i = Σ_j m_ij π_j が i によらないことを確認する

    P を渡すと k = Pk (最大値原理) の残差も検証する。
    """
    tol = Config.CONSTANCY_TOL if tol is None else tol
    k = M.entries @ pi.entries
    K = float(k.mean())
    deviation = float(np.max(np.abs(k - K)) / K)
    if deviation >= tol:
        raise ConstancyViolation(
            f"K_i が一定ではありません (相対偏差 {deviation:.3e})",
            {'k': k.tolist(), 'deviation': deviation},
        )

    residual = None
    if P is not None:
        residual = float(np.max(np.abs(k - P.entries @ k)))
        if residual >= tol * max(1.0, K):
            raise ConstancyViolation(
                f"k = Pk が成り立ちません (residual={residual:.3e})", {'residual': residual}
            )

    return ConstancyResult(k=k, K=K, max_relative_deviation=deviation, fixed_point_residual=residual)


def fixed_point_residuals(P: TransitionMatrix, k: np.ndarray, n_max: int = 5) -> List[float]:
    """k = Pⁿk の残差 (n = 1..n_max)"""
    return [float(np.max(np.abs(k - matrix_power(P, n) @ k))) for n in range(1, n_max + 1)]


def kemeny_via_traces(Z: GInverse, Ash: GInverse, tol: float = 1e-9) -> tuple:
    """tr(Z) と 1 + tr(A#)"""
    if Z.kind is not GInverseKind.FUNDAMENTAL:
        raise WrongKind(f"Z には fundamental が必要です: {Z.kind.value}")
    if Ash.kind is not GInverseKind.GROUP:
        raise WrongKind(f"A# には group が必要です: {Ash.kind.value}")

    trace_Z = float(np.trace(Z.matrix))
    trace_group = 1.0 + float(np.trace(Ash.matrix))
    if abs(trace_Z - trace_group) >= tol * max(1.0, trace_Z):
        raise RouteDisagreement(
            "tr(Z) と 1 + tr(A#) が一致しません", {'trace_Z': trace_Z, 'trace_group': trace_group}
        )
    return trace_Z, trace_group


def kemeny_via_eigenvalues(spec: SpectrumSummary, tol: float = 1e-9) -> float:
    """K = 1 + Σ_{i≥2} 1/(1 − λ_i)"""
    values = spec.eigenvalues
    at_one = np.abs(values - 1.0) < tol
    if int(at_one.sum()) != 1:
        raise EigenvalueAtOneRepeated(
            f"固有値 1 の個数が {int(at_one.sum())} です", {'count': int(at_one.sum())}
        )

    rest = values[~at_one]
    # 共役対はまとめて実数として足す
    total = sum(2.0 * (1.0 / (1.0 - z)).real for z in rest if z.imag > 0)
    total += sum((1.0 / (1.0 - z)).real for z in rest if z.imag == 0)
    full = np.sum(1.0 / (1.0 - rest))
    if abs(full.imag) >= 1e-8 * max(1.0, abs(full)):
        raise EigenFailure("Σ 1/(1−λ) の虚部が消えません", {'imag': float(full.imag)})

    K = 1.0 + float(total)
    alternate = spec.m + float(np.sum(rest / (1.0 - rest)).real)
    if abs(K - alternate) >= tol * max(1.0, K):
        raise RouteDisagreement(
            "固有値による 2 つの表示が一致しません", {'K': K, 'alternate': alternate}
        )
    return K


def kemeny_via_ginverse(G: GInverse, pi: ProbabilityVector, P: Optional[TransitionMatrix] = None,
                        tol: float = 1e-9) -> float:
    """K = 1 + tr(G) − tr(GΠ)。Ge = ge なら 1 − g + tr(G) とも照合する"""
    if P is not None:
        check = verify_ginverse(P, G)
        if not check.passed:
            raise NotAGInverse(
                f"I − P の g-inverse ではありません (residual={check.residual:.3e})",
                {'residual': check.residual},
            )

    g = G.matrix
    p = pi.entries
    K = 1.0 + float(np.trace(g)) - float(p @ g.sum(axis=1))
    if G.ge_constant is not None:
        shortcut = 1.0 - G.ge_constant + float(np.trace(g))
        if abs(K - shortcut) >= tol * max(1.0, K):
            raise RouteDisagreement(
                "1 − g + tr(G) と一致しません", {'K': K, 'shortcut': shortcut}
            )
    return K


def kemeny_via_submatrix(P: TransitionMatrix, pi: ProbabilityVector, Ash: GInverse, j: int) -> float:
    """K = tr(A_j⁻¹) − a#_jj/π_j + 1 (A_j は I − P から j 行 j 列を除いたもの)"""
    j = check_state(j, P.m)
    A = np.eye(P.m) - P.entries
    keep = [k for k in range(P.m) if k != j]
    A_j = A[np.ix_(keep, keep)]
    try:
        A_j_inv = scipy.linalg.inv(A_j)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSubmatrix(f"A_{j} が特異です: {exc}") from exc
    if not np.all(np.isfinite(A_j_inv)):
        raise SingularSubmatrix(f"A_{j} の逆行列が有限ではありません")

    return float(np.trace(A_j_inv)) - float(Ash.matrix[j, j]) / float(pi.entries[j]) + 1.0


def kemeny_bounds(spec: SpectrumSummary, structure: ChainStructure) -> BoundsReport:
    """一般の下界 (m+1)/2 と可逆連鎖の境界"""
    if not structure.irreducible:
        raise NotIrreducible("境界は既約な連鎖に対してのみ定義されます")

    m = spec.m
    report = BoundsReport(lower_general=(m + 1) / 2)
    if structure.reversible:
        report.reversible_applicable = True
        report.lower_reversible = 1.0 + (m - 1) ** 2 / m
        if structure.regular:
            report.lower_levene_loizou = 1.0 + (m - 1) / 2
            if spec.lambda2 < 1.0 - 1e-12:
                report.upper_applicable = True
                report.upper_reversible = 1.0 + (m - 1) / (1.0 - spec.lambda2)
    return report


def _random_parametric(P: TransitionMatrix, pi: ProbabilityVector, rng: np.random.Generator) -> GInverse:
    m = P.m
    t = rng.uniform(0.5, 1.5, m)
    u = rng.uniform(0.5, 1.5, m)
    return parametric_ginverse(P, pi, t, u, rng.normal(size=m), rng.normal(size=m))


def analyze_kemeny(P: TransitionMatrix, routes: Optional[Iterable[str]] = None,
                   tol: Optional[float] = None, seed: int = 0) -> KemenyReport:
    """要求された経路すべてで K を計算して KemenyReport にまとめる"""
    requested = list(ROUTES if routes is None else routes)
    unknown = [name for name in requested if name not in ROUTES]
    if unknown:
        raise ValueError(f"未知の経路: {', '.join(unknown)}")

    pi = stationary(P)
    Z = fundamental_matrix(P, pi)
    Ash = group_inverse(P, pi)

    values: Dict[str, float] = {}
    submatrix_values: List[float] = []
    surfer_K = None

    if 'mfpt_rowdot' in requested:
        M = mfpt_direct(P)
        constancy = kemeny_constancy(M, pi, P)
        values['mfpt_rowdot'] = constancy.K
        surfer_K = float(pi.entries @ constancy.k)
    if 'trace_Z' in requested or 'trace_group' in requested:
        trace_Z, trace_group = kemeny_via_traces(Z, Ash)
        if 'trace_Z' in requested:
            values['trace_Z'] = trace_Z
        if 'trace_group' in requested:
            values['trace_group'] = trace_group
    if 'eigenvalue' in requested:
        values['eigenvalue'] = kemeny_via_eigenvalues(spectrum(P))
    if 'ginverse_general' in requested:
        G = _random_parametric(P, pi, np.random.default_rng(seed))
        values['ginverse_general'] = kemeny_via_ginverse(G, pi, P)
    if 'submatrix' in requested:
        submatrix_values = [kemeny_via_submatrix(P, pi, Ash, j) for j in range(P.m)]
        values['submatrix'] = submatrix_values[-1]

    everything = list(values.values()) + submatrix_values
    K = values.get('trace_Z', float(np.mean(everything)))
    report = KemenyReport(
        K=K,
        routes=values,
        spread=float(max(everything) - min(everything)),
        modified_K=K - 1.0,
        submatrix_by_state=submatrix_values,
        surfer_K=surfer_K,
    )
    report.check(P.m, tol)

    logger.info("Kemeny 定数を計算", K=K, spread=report.spread, routes=list(values))
    return report


def kemeny_constant(P: TransitionMatrix) -> float:
    """tr(Z) による K (他モジュールからの簡易呼び出し用)"""
    return float(np.trace(fundamental_matrix(P, stationary(P)).matrix))


def bounds_for(P: TransitionMatrix) -> BoundsReport:
    return kemeny_bounds(spectrum(P), classify(P))

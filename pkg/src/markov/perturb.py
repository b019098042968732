"""
推移行列の摂動
構造化された摂動 (Type 1 / Type 2 / PSD / damping) と定常分布・Kemeny 定数の安定性チェック
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
import structlog

from src.core.errors import (
    BoundViolation,
    DimensionMismatch,
    InvalidPerturbation,
    NegativeEntry,
    NotIrreducible,
    NotPSD,
    NotStochasticAfterPerturbation,
    NotSymmetricBase,
    PreconditionViolated,
    RouteDisagreement,
    RowSumViolation,
)
from src.markov.chain_core import TransitionMatrix, is_irreducible, stationary, validate_stochastic
from src.markov.ginverse import fundamental_matrix
from src.markov.passage import MFPTMatrix, check_state, mfpt_from_ginverse

logger = structlog.get_logger(__name__)

ROW_SUM_TOL = 1e-12
PSD_TOL = 1e-10
MAX_DRAWS = 100


class PerturbationKind(Enum):
    GENERAL = "general"
    TYPE1 = "type1"
    TYPE2 = "type2"
    PSD_SUBTRACT = "psd"
    DAMPING = "damping"


@dataclass(frozen=True, eq=False)
class Perturbation:
    """摂動 E と種類ごとのパラメータ

    damping の E は P に依存するので matrix_for(P) で求める。
    """

    kind: PerturbationKind
    E: Optional[np.ndarray] = None
    r: Optional[int] = None
    h: Optional[np.ndarray] = None
    alpha: Optional[float] = None
    v: Optional[np.ndarray] = None

    @classmethod
    def general(cls, E) -> 'Perturbation':
        E = np.asarray(E, dtype=float)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise InvalidPerturbation(f"E は正方行列が必要です: shape={E.shape}")
        _require_zero_rows(E)
        return cls(PerturbationKind.GENERAL, E=E)

    @classmethod
    def type1(cls, r: int, h) -> 'Perturbation':
        h = _zero_sum_vector(h)
        r = check_state(r, h.shape[0])
        return cls(PerturbationKind.TYPE1, E=np.outer(np.eye(h.shape[0])[r], h), r=r, h=h)

    @classmethod
    def type2(cls, h) -> 'Perturbation':
        h = _zero_sum_vector(h)
        return cls(PerturbationKind.TYPE2, E=np.outer(np.ones(h.shape[0]), h), h=h)

    @classmethod
    def psd_subtract(cls, E) -> 'Perturbation':
        E = np.asarray(E, dtype=float)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise InvalidPerturbation(f"E は正方行列が必要です: shape={E.shape}")
        if np.max(np.abs(E - E.T)) > PSD_TOL:
            raise NotPSD("E が対称ではありません")
        smallest = float(scipy.linalg.eigvalsh(E)[0])
        if smallest < -PSD_TOL:
            raise NotPSD(f"E が半正定値ではありません (最小固有値 {smallest:.3e})", {'min_eigenvalue': smallest})
        _require_zero_rows(E)
        return cls(PerturbationKind.PSD_SUBTRACT, E=E)

    @classmethod
    def damping(cls, alpha: float, v) -> 'Perturbation':
        v = np.asarray(v, dtype=float).ravel()
        if not 0.0 <= alpha <= 1.0:
            raise InvalidPerturbation(f"0 ≤ α ≤ 1 が必要です: {alpha}", {'alpha': alpha})
        if np.any(v <= 0.0) or abs(v.sum() - 1.0) > 1e-12:
            raise InvalidPerturbation("v は正の確率ベクトルが必要です")
        return cls(PerturbationKind.DAMPING, alpha=float(alpha), v=v)

    def matrix_for(self, P: TransitionMatrix) -> np.ndarray:
        """P̄ − P (PSD では P̄ = P − E なので −E)"""
        if self.kind is PerturbationKind.DAMPING:
            if self.v.shape[0] != P.m:
                raise DimensionMismatch(f"v の次元が一致しません: {self.v.shape[0]} vs {P.m}")
            return (1.0 - self.alpha) * (np.outer(np.ones(P.m), self.v) - P.entries)
        if self.E.shape != P.entries.shape:
            raise DimensionMismatch(f"E の次元が一致しません: {self.E.shape} vs {P.entries.shape}")
        if self.kind is PerturbationKind.PSD_SUBTRACT:
            return -self.E
        return self.E

    def describe(self) -> dict:
        summary = {'kind': self.kind.value}
        if self.r is not None:
            summary['r'] = self.r
        if self.h is not None:
            summary['h'] = self.h.tolist()
        if self.alpha is not None:
            summary['alpha'] = self.alpha
            summary['v'] = self.v.tolist()
        return summary


def _require_zero_rows(E: np.ndarray) -> None:
    worst = float(np.max(np.abs(E.sum(axis=1)))) if E.size else 0.0
    if worst > ROW_SUM_TOL:
        raise InvalidPerturbation(f"E の行和が 0 ではありません ({worst:.3e})", {'row_sum': worst})


def _zero_sum_vector(h) -> np.ndarray:
    h = np.asarray(h, dtype=float).ravel()
    if abs(h.sum()) > ROW_SUM_TOL:
        raise InvalidPerturbation(f"hᵀe = 0 が必要です ({h.sum():.3e})", {'sum': float(h.sum())})
    return h


def apply_perturbation(P: TransitionMatrix, pert: Perturbation) -> TransitionMatrix:
    """P̄ を組み立てて確率行列として検証する"""
    if pert.kind is PerturbationKind.PSD_SUBTRACT and np.max(np.abs(P.entries - P.entries.T)) > PSD_TOL:
        raise NotSymmetricBase("PSD 摂動には対称な P が必要です")

    if pert.kind is PerturbationKind.DAMPING:
        pert.matrix_for(P)  # 次元チェック
        raw = pert.alpha * P.entries + (1.0 - pert.alpha) * np.outer(np.ones(P.m), pert.v)
    else:
        raw = P.entries + pert.matrix_for(P)
    # 丸め誤差による微小な負値だけを 0 にする
    raw = np.where((raw < 0.0) & (raw > -1e-14), 0.0, raw)

    try:
        return validate_stochastic(raw)
    except (NegativeEntry, RowSumViolation) as exc:
        raise NotStochasticAfterPerturbation(
            f"摂動後の行列が確率行列ではありません: {exc.message}",
            {'kind': pert.kind.value, **exc.details},
        ) from exc


def perturbation_matrix(P: TransitionMatrix, P_bar: TransitionMatrix) -> np.ndarray:
    if P.entries.shape != P_bar.entries.shape:
        raise DimensionMismatch(f"次元が一致しません: {P.entries.shape} vs {P_bar.entries.shape}")
    return P_bar.entries - P.entries


@dataclass(frozen=True)
class PerturbReport:
    """‖πᵀ − π̄ᵀ‖₁ ≤ (K − 1)‖E‖∞ の検証結果"""

    l1_shift: float
    norm_inf: float
    norm_col: float
    bound: float
    holds: bool
    K: float
    K_bar: float

    @property
    def bound_col(self) -> float:
        return (self.K - 1.0) * self.norm_col

    def to_dict(self):
        return {
            'l1_shift': self.l1_shift,
            'norm_inf': self.norm_inf,
            'norm_col': self.norm_col,
            'bound': self.bound,
            'bound_col': self.bound_col,
            'holds': self.holds,
            'K': self.K,
            'K_bar': self.K_bar,
        }


def _chain_summary(P: TransitionMatrix) -> Tuple[np.ndarray, float, MFPTMatrix]:
    pi = stationary(P)
    Z = fundamental_matrix(P, pi)
    return pi.entries, float(np.trace(Z.matrix)), mfpt_from_ginverse(P, pi, Z)


def l1_bound_check(P: TransitionMatrix, P_bar: TransitionMatrix) -> PerturbReport:
    """‖E‖∞ は最大絶対行和。列方向の最大絶対和も併記する"""
    E = perturbation_matrix(P, P_bar)
    pi, K, _ = _chain_summary(P)
    pi_bar, K_bar, _ = _chain_summary(P_bar)

    l1_shift = float(np.sum(np.abs(pi - pi_bar)))
    norm_inf = float(np.max(np.sum(np.abs(E), axis=1)))
    norm_col = float(np.max(np.sum(np.abs(E), axis=0)))
    bound = (K - 1.0) * norm_inf
    report = PerturbReport(
        l1_shift=l1_shift,
        norm_inf=norm_inf,
        norm_col=norm_col,
        bound=bound,
        holds=l1_shift <= bound + 1e-12,
        K=K,
        K_bar=K_bar,
    )
    if not report.holds:
        logger.warning("ℓ1 境界が成り立ちません", l1_shift=l1_shift, bound=bound)
    return report


@dataclass
class Type1Report:
    """E = e_r hᵀ の摂動に対する診断"""

    r: int
    max_unchanged_delta: float
    sign_equivalence_holds: bool
    sign_violations: List[Tuple[int, int]]
    predictor: float
    K: float
    K_bar: float
    predictor_consistent: bool

    def to_dict(self):
        return {
            'r': self.r,
            'max_unchanged_delta': self.max_unchanged_delta,
            'sign_equivalence_holds': self.sign_equivalence_holds,
            'sign_violations': [list(pair) for pair in self.sign_violations],
            'predictor': self.predictor,
            'K': self.K,
            'K_bar': self.K_bar,
            'predictor_consistent': self.predictor_consistent,
        }


def type1_analysis(P: TransitionMatrix, r: int, h, tol: float = 1e-8) -> Type1Report:
    """r 行だけを変える摂動で m̄_ir = m_ir と符号の対応を確かめる"""
    r = check_state(r, P.m)
    P_bar = apply_perturbation(P, Perturbation.type1(r, h))
    pi, K, M = _chain_summary(P)
    pi_bar, K_bar, M_bar = _chain_summary(P_bar)

    others = [i for i in range(P.m) if i != r]
    delta_m = M_bar.entries - M.entries
    delta_pi = pi_bar - pi
    max_unchanged = float(np.max(np.abs(delta_m[others, r]))) if others else 0.0

    violations = []
    for i in others:
        for j in others:
            # m̄_ij ≥ m_ij ⇔ π̄_j ≤ π_j。両方が tol を超えて同じ向きに動いたときだけ違反
            if (delta_m[i, j] > tol and delta_pi[j] > tol) or (delta_m[i, j] < -tol and delta_pi[j] < -tol):
                violations.append((i, j))

    # K − K̄ と predictor は同符号 (predictor ≥ 0 ⇔ K̄ ≤ K)
    predictor = float(np.sum(delta_pi[others] * M.entries[others, r]))
    consistent = (predictor >= -tol) == (K - K_bar >= -tol)
    if not consistent:
        logger.warning("Type 1 の予測子と K̄ − K の符号が一致しません", predictor=predictor, delta=K_bar - K)

    return Type1Report(
        r=r,
        max_unchanged_delta=max_unchanged,
        sign_equivalence_holds=not violations,
        sign_violations=violations,
        predictor=predictor,
        K=K,
        K_bar=K_bar,
        predictor_consistent=consistent,
    )


def type2_invariance(P: TransitionMatrix, h, tol: float = 1e-9) -> dict:
    """E = ehᵀ では K = K̄"""
    P_bar = apply_perturbation(P, Perturbation.type2(h))
    if not is_irreducible(P_bar):
        raise NotIrreducible("摂動後の連鎖が既約ではありません")
    K = float(np.trace(fundamental_matrix(P, stationary(P)).matrix))
    K_bar = float(np.trace(fundamental_matrix(P_bar, stationary(P_bar)).matrix))
    if abs(K - K_bar) >= tol * max(1.0, K):
        raise RouteDisagreement("Type 2 摂動で K が変化しました", {'K': K, 'K_bar': K_bar})
    return {'K': K, 'K_bar': K_bar}


@dataclass
class MonotonicityReport:
    kind: PerturbationKind
    K: float
    K_bar: float
    k_holds: bool
    row_sums_hold: Optional[bool] = None
    row_sum_gap: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            'kind': self.kind.value,
            'K': self.K,
            'K_bar': self.K_bar,
            'k_holds': self.k_holds,
            'row_sums_hold': self.row_sums_hold,
            'row_sum_gap': self.row_sum_gap,
            'notes': list(self.notes),
        }


def monotonicity_checks(P: TransitionMatrix, pert: Perturbation) -> MonotonicityReport:
    """PSD 減算と damping で K̄ ≤ K を確かめる

    PSD 減算で破れたら BoundViolation。damping は固有値が負や複素数の連鎖で
    破れることがあるので k_holds に記録して警告する。
    """
    if pert.kind not in (PerturbationKind.PSD_SUBTRACT, PerturbationKind.DAMPING):
        raise PreconditionViolated(
            f"単調性は psd と damping のみ対象です: {pert.kind.value}", {'kind': pert.kind.value}
        )

    P_bar = apply_perturbation(P, pert)
    if not is_irreducible(P_bar):
        raise NotIrreducible("摂動後の連鎖が既約ではありません")
    _, K, M = _chain_summary(P)
    _, K_bar, M_bar = _chain_summary(P_bar)

    report = MonotonicityReport(kind=pert.kind, K=K, K_bar=K_bar, k_holds=K_bar <= K + 1e-9)
    if pert.kind is PerturbationKind.PSD_SUBTRACT:
        gap = float(np.max(M_bar.entries.sum(axis=1) - M.entries.sum(axis=1)))
        report.row_sum_gap = gap
        report.row_sums_hold = gap <= 1e-8
        if not report.k_holds or not report.row_sums_hold:
            raise BoundViolation(
                "PSD 減算で K̄ ≤ K が成り立ちません", {'K': K, 'K_bar': K_bar, 'row_sum_gap': gap}
            )
    elif not report.k_holds:
        report.notes.append("damping で K̄ > K (負または複素の固有値を持つ連鎖)")
        logger.warning("damping で K̄ > K", K=K, K_bar=K_bar, alpha=pert.alpha)
    return report


def _random_type2_h(P: np.ndarray, rng: np.random.Generator, scale: float) -> np.ndarray:
    floor = P.min(axis=0)
    total = float(floor.sum())
    m = P.shape[0]
    if total <= 0.0:
        return np.zeros(m)
    t = rng.uniform(0.0, 1.0) * min(scale, total)
    return t * (rng.dirichlet(np.ones(m)) - floor / total)


def _random_psd(P: np.ndarray, rng: np.random.Generator, scale: float) -> Optional[np.ndarray]:
    m = P.shape[0]
    support = rng.choice(m, size=int(rng.integers(2, m + 1)), replace=False)
    q = np.zeros(m)
    q[support] = rng.normal(size=support.shape[0])
    q[support] -= q[support].mean()
    outer = np.outer(q, q)
    positive = outer > 1e-15
    if np.any(P[positive] <= 0.0):
        return None
    c_max = float(np.min(P[positive] / outer[positive]))
    return rng.uniform(0.5, 1.0) * min(scale, c_max) * outer


def random_admissible_perturbation(P: TransitionMatrix, kind: PerturbationKind,
                                   rng: np.random.Generator, scale: float = 0.5) -> Perturbation:
    """P̄ が既約な確率行列になる摂動を棄却法で引く (最大 100 回)"""
    m = P.m
    entries = P.entries
    for attempt in range(MAX_DRAWS):
        if kind is PerturbationKind.GENERAL:
            target = rng.dirichlet(np.ones(m), size=m)
            pert = Perturbation.general(rng.uniform(0.0, scale) * (target - entries))
        elif kind is PerturbationKind.TYPE1:
            r = int(rng.integers(m))
            h = rng.uniform(0.0, scale) * (rng.dirichlet(np.ones(m)) - entries[r])
            pert = Perturbation.type1(r, h - h.mean())
        elif kind is PerturbationKind.TYPE2:
            h = _random_type2_h(entries, rng, scale)
            pert = Perturbation.type2(h - h.mean())
        elif kind is PerturbationKind.PSD_SUBTRACT:
            E = _random_psd(entries, rng, scale)
            if E is None:
                continue
            pert = Perturbation.psd_subtract(E)
        else:
            alpha = 1.0 - rng.uniform(0.0, min(scale, 1.0))
            pert = Perturbation.damping(alpha, rng.dirichlet(np.ones(m)))

        try:
            P_bar = apply_perturbation(P, pert)
        except NotStochasticAfterPerturbation:
            scale /= 2
            continue
        if is_irreducible(P_bar):
            return pert
        scale /= 2
        logger.debug("摂動を棄却", kind=kind.value, attempt=attempt)

    raise InvalidPerturbation(
        f"{MAX_DRAWS} 回の試行で許容可能な摂動が見つかりませんでした", {'kind': kind.value}
    )

"""
混合時間 (time to mixing)
モンテカルロ推定と g-inverse による 2 次モーメント・分散の閉形式
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
import structlog

from src.config import Config
from src.core.errors import (
    ConstancyViolation,
    DegenerateParameters,
    InvalidSampleCount,
    NonTermination,
    NotIrreducible,
    Reducible,
    RequiresGeConstant,
)
from src.markov.chain_core import ProbabilityVector, TransitionMatrix, is_irreducible
from src.markov.ginverse import GInverse
from src.markov.passage import check_state

logger = structlog.get_logger(__name__)


class MixingVariant(Enum):
    """混合の判定方法"""
    RETURN = "return"      # T ≥ 1
    HITTING = "hitting"    # start = target なら T = 0


@dataclass(frozen=True)
class MixingSample:
    start: int
    target: int
    steps: int
    variant: MixingVariant

    def __post_init__(self):
        if self.variant is MixingVariant.RETURN and self.steps < 1:
            raise ValueError("Return では steps ≥ 1 です")
        if self.variant is MixingVariant.HITTING and self.start == self.target and self.steps != 0:
            raise ValueError("Hitting で start = target なら steps = 0 です")


@dataclass(frozen=True)
class PowerSums:
    """整数のべき和 (n, Σx, Σx², Σx³, Σx⁴)。シャード間で正確に足し合わせられる"""

    n: int = 0
    s1: int = 0
    s2: int = 0
    s3: int = 0
    s4: int = 0

    @classmethod
    def of(cls, steps: np.ndarray) -> 'PowerSums':
        values, counts = np.unique(np.asarray(steps, dtype=np.int64), return_counts=True)
        pairs = [(int(v), int(c)) for v, c in zip(values, counts)]
        return cls(
            n=sum(c for _, c in pairs),
            s1=sum(c * v for v, c in pairs),
            s2=sum(c * v ** 2 for v, c in pairs),
            s3=sum(c * v ** 3 for v, c in pairs),
            s4=sum(c * v ** 4 for v, c in pairs),
        )

    def __add__(self, other: 'PowerSums') -> 'PowerSums':
        return PowerSums(
            self.n + other.n,
            self.s1 + other.s1,
            self.s2 + other.s2,
            self.s3 + other.s3,
            self.s4 + other.s4,
        )


@dataclass(frozen=True)
class MixingEstimate:
    mean: float
    variance: float
    n: int
    seed: int
    ci_halfwidth_95: float
    variance_se: float
    start: int
    variant: MixingVariant
    shards: int = 1

    def to_dict(self):
        return {
            'start': self.start,
            'variant': self.variant.value,
            'mean': self.mean,
            'variance': self.variance,
            'n': self.n,
            'seed': self.seed,
            'shards': self.shards,
            'ci_halfwidth_95': self.ci_halfwidth_95,
            'variance_se': self.variance_se,
        }


@dataclass(frozen=True, eq=False)
class MomentVectors:
    """η⁽²⁾ と v = η⁽²⁾ − K²e、補助ベクトル α"""

    eta2: np.ndarray
    v: np.ndarray
    K: float
    alpha: np.ndarray
    alpha_constant: bool = field(default=False)


def _cumulative_rows(P: TransitionMatrix) -> np.ndarray:
    cumulative = np.cumsum(P.entries, axis=1)
    cumulative /= cumulative[:, -1:]
    cumulative[:, -1] = 1.0
    return cumulative


def _draw_targets(pi: ProbabilityVector, rng: np.random.Generator, size: int) -> np.ndarray:
    # 状態番号順の累積分布に対する逆関数法
    cumulative = np.cumsum(pi.entries)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, rng.random(size), side='right').astype(np.int64)


def _simulate(cumulative: np.ndarray, start: int, targets: np.ndarray, variant: MixingVariant,
              rng: np.random.Generator, max_steps: int) -> np.ndarray:
    n = targets.shape[0]
    steps = np.zeros(n, dtype=np.int64)
    position = np.full(n, start, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    if variant is MixingVariant.HITTING:
        active &= targets != start

    step = 0
    while active.any():
        step += 1
        if step > max_steps:
            raise NonTermination(
                f"{max_steps} ステップを超えても混合しませんでした",
                {'unfinished': int(active.sum())},
            )
        index = np.flatnonzero(active)
        u = rng.random(index.shape[0])
        position[index] = np.argmax(cumulative[position[index]] > u[:, None], axis=1)
        hit = index[position[index] == targets[index]]
        steps[hit] = step
        active[hit] = False
    return steps


def sample_mixing_time(P: TransitionMatrix, pi: ProbabilityVector, start: int,
                       variant: MixingVariant, rng: np.random.Generator,
                       target: Optional[int] = None,
                       max_steps: Optional[int] = None) -> MixingSample:
    """Y ~ π を引いて start から X_n = Y となる最初の n を返す"""
    if not is_irreducible(P):
        raise NotIrreducible("混合時間には既約な連鎖が必要です")
    start = check_state(start, P.m)
    max_steps = int(Config.MAX_MIXING_STEPS) if max_steps is None else max_steps

    if target is None:
        targets = _draw_targets(pi, rng, 1)
    else:
        targets = np.array([check_state(target, P.m)], dtype=np.int64)

    steps = _simulate(_cumulative_rows(P), start, targets, variant, rng, max_steps)
    return MixingSample(start=start, target=int(targets[0]), steps=int(steps[0]), variant=variant)


def _shard_sizes(n: int, shards: int) -> List[int]:
    base, extra = divmod(n, shards)
    return [base + (1 if k < extra else 0) for k in range(shards)]


def _run_shard(P: TransitionMatrix, pi: ProbabilityVector, start: int, variant: MixingVariant,
               size: int, seed: int, max_steps: int) -> PowerSums:
    rng = np.random.default_rng(seed)
    targets = _draw_targets(pi, rng, size)
    steps = _simulate(_cumulative_rows(P), start, targets, variant, rng, max_steps)
    sums = PowerSums.of(steps)
    logger.debug("シャード完了", seed=seed, n=size, mean=sums.s1 / max(size, 1))
    return sums


def _summarize(sums: PowerSums) -> Tuple[float, float, float]:
    n = sums.n
    mean = Fraction(sums.s1, n)
    if n < 2:
        return float(mean), 0.0, 0.0

    variance = (Fraction(sums.s2) - Fraction(sums.s1 ** 2, n)) / (n - 1)
    # 4 次中心モーメントから標本分散の標準誤差を求める
    m2 = Fraction(sums.s2, n)
    m3 = Fraction(sums.s3, n)
    m4 = Fraction(sums.s4, n)
    mu4 = m4 - 4 * mean * m3 + 6 * mean ** 2 * m2 - 3 * mean ** 4
    se_squared = (mu4 - variance ** 2 * Fraction(n - 3, n - 1)) / n
    return float(mean), float(variance), float(np.sqrt(max(float(se_squared), 0.0)))


def estimate_mixing_moments(P: TransitionMatrix, pi: ProbabilityVector, start: int,
                            variant: MixingVariant, n: int, seed: int, shards: int = 1,
                            max_steps: Optional[int] = None) -> MixingEstimate:
    """n 個のサンプルから平均と不偏分散を推定する

    シャード k は seed + k で初期化する。shards=1 が再現性の基準となる逐次モード。
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidSampleCount(f"サンプル数は 1 以上が必要です: {n}", {'n': n})
    if shards < 1 or shards > n:
        raise InvalidSampleCount(f"シャード数は 1..n の範囲が必要です: {shards}", {'shards': shards})
    if not is_irreducible(P):
        raise NotIrreducible("混合時間には既約な連鎖が必要です")
    start = check_state(start, P.m)
    max_steps = int(Config.MAX_MIXING_STEPS) if max_steps is None else max_steps

    jobs = [
        (P, pi, start, variant, size, seed + k, max_steps)
        for k, size in enumerate(_shard_sizes(int(n), shards))
    ]
    if shards == 1:
        parts = [_run_shard(*jobs[0])]
    else:
        with ThreadPoolExecutor(max_workers=shards) as pool:
            parts = list(pool.map(lambda job: _run_shard(*job), jobs))

    total = sum(parts, PowerSums())
    mean, variance, variance_se = _summarize(total)
    estimate = MixingEstimate(
        mean=mean,
        variance=variance,
        n=int(n),
        seed=seed,
        ci_halfwidth_95=1.96 * float(np.sqrt(variance / n)),
        variance_se=variance_se,
        start=start,
        variant=variant,
        shards=shards,
    )
    logger.info(
        "混合時間を推定",
        start=start, variant=variant.value, n=n, shards=shards, mean=mean, variance=variance,
    )
    return estimate


def start_state_sweep(P: TransitionMatrix, pi: ProbabilityVector, variant: MixingVariant,
                      n: int, seed: int, shards: int = 1) -> List[MixingEstimate]:
    """すべての出発状態について推定する"""
    return [
        estimate_mixing_moments(P, pi, start, variant, n, seed, shards)
        for start in range(P.m)
    ]


def mixing_variance_closed_form(P: TransitionMatrix, pi: ProbabilityVector, G: GInverse,
                                tol: float = 1e-9) -> MomentVectors:
    """Ge = ge の g-inverse から η⁽²⁾ と v を求める (Return の意味)

    L = I − G + EG_d, α = e − (ΠG)_d De + G_d De
    """
    if G.ge_constant is None:
        raise RequiresGeConstant("Ge = ge を満たす g-inverse が必要です", {'kind': G.kind.value})

    m = P.m
    g = G.ge_constant
    matrix = G.matrix
    p = pi.entries
    e = np.ones(m)
    diag = np.diag(matrix)

    L = np.eye(m) - matrix + np.outer(e, diag)
    alpha = e - (p @ matrix) / p + diag / p

    trace = float(np.trace(matrix))
    trace_sq = float(np.trace(matrix @ matrix))
    K = 1.0 - g + trace
    eta2 = (2 * trace_sq - 3 * trace - (1 - 2 * g) * (1 - g)) * e + 2 * L @ alpha
    v = (2 * trace_sq - trace ** 2 - (5 - 2 * g) * trace - (1 - g) * (2 - 3 * g)) * e + 2 * L @ alpha

    residual = float(np.max(np.abs(v - (eta2 - K ** 2))))
    if residual >= tol * max(1.0, K ** 2):
        raise ConstancyViolation("v = η⁽²⁾ − K²e が成り立ちません", {'residual': residual})
    if np.any(v < -tol * max(1.0, K ** 2)):
        logger.warning("負の分散", v=v.tolist())

    alpha_constant = bool(np.max(alpha) - np.min(alpha) < 1e-8 * max(1.0, float(np.max(np.abs(alpha)))))
    return MomentVectors(eta2=eta2, v=v, K=K, alpha=alpha, alpha_constant=alpha_constant)


def two_state_variance(a: float, b: float) -> np.ndarray:
    """2 状態連鎖 P = [[1−a, a], [b, 1−b]] の v の閉形式"""
    if a <= 0.0 or b <= 0.0:
        raise Reducible("a = 0 または b = 0 の 2 状態連鎖は可約です", {'a': a, 'b': b})
    if a > 1.0 or b > 1.0:
        raise DegenerateParameters(f"0 < a, b ≤ 1 が必要です: a={a}, b={b}")

    d = 1.0 - a - b
    scale = 1.0 / (a * b * (1.0 - d) ** 2)
    return scale * np.array([
        (2 * a * a + 2 * b - 3 * a * b) * (a + b) - a * b,
        (2 * b * b + 2 * a - 3 * a * b) * (a + b) - a * b,
    ])

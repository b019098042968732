"""
グラフ上のランダムウォークと電気回路の対応
実効抵抗・到達時間・Kirchhoff 指数・有向グラフの μ(D)
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.linalg
import structlog

from src.config import Config
from src.core.errors import (
    BadStateIndex,
    Disconnected,
    NegativeEntry,
    NotRegular,
    NotReversible,
    NotSimpleGraph,
    NotStronglyConnected,
    NotUndirected,
    ParseError,
    SingularNetwork,
    TooLargeForExactCycleSearch,
    ZeroOutDegree,
)
from src.markov.chain_core import ProbabilityVector, TransitionMatrix, stationary
from src.markov.ginverse import fundamental_matrix
from src.markov.passage import check_state, mfpt_direct

logger = structlog.get_logger(__name__)

Edge = Tuple[int, int, float]


@dataclass(frozen=True)
class GraphSpec:
    """重み付き (有向) グラフ。無向辺は 1 回だけ保持し、隣接行列で対称に展開する"""

    m: int
    edges: Tuple[Edge, ...]
    directed: bool = False

    def __post_init__(self):
        normalized = []
        for edge in self.edges:
            i, j = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) > 2 else 1.0
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise BadStateIndex(f"頂点番号が範囲外です: ({i}, {j})", {'m': self.m})
            if not w > 0.0:
                raise ParseError(f"辺の重みは正が必要です: ({i}, {j}, {w})")
            normalized.append((i, j, w))
        object.__setattr__(self, 'edges', tuple(normalized))

    @classmethod
    def from_pairs(cls, m: int, pairs: Sequence[Tuple[int, int]], directed: bool = False) -> 'GraphSpec':
        return cls(m, tuple((i, j, 1.0) for i, j in pairs), directed)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.m, self.m))
        for i, j, w in self.edges:
            A[i, j] += w
            if not self.directed and i != j:
                A[j, i] += w
        return A

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def unweighted(self) -> bool:
        return all(w == 1.0 for _, _, w in self.edges)

    def to_networkx(self) -> nx.Graph:
        graph = nx.DiGraph() if self.directed else nx.Graph()
        graph.add_nodes_from(range(self.m))
        graph.add_weighted_edges_from(self.edges)
        return graph


@dataclass(frozen=True, eq=False)
class Network:
    """対称なコンダクタンス行列 C (対角はループ)"""

    conductances: np.ndarray

    def __post_init__(self):
        C = np.array(self.conductances, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise NotUndirected(f"コンダクタンス行列は正方が必要です: shape={C.shape}")
        if np.max(np.abs(C - C.T)) > 1e-12:
            raise NotUndirected("コンダクタンス行列が対称ではありません")
        if np.any(C < 0.0):
            raise NegativeEntry("コンダクタンスは非負が必要です")
        C = (C + C.T) / 2
        C.setflags(write=False)
        object.__setattr__(self, 'conductances', C)
        if np.any(self.node_totals <= 0.0):
            raise Disconnected("孤立した節点があります", {'isolated': np.flatnonzero(self.node_totals <= 0).tolist()})

    @property
    def m(self) -> int:
        return self.conductances.shape[0]

    @property
    def node_totals(self) -> np.ndarray:
        return self.conductances.sum(axis=1)

    @property
    def total(self) -> float:
        return float(self.node_totals.sum())

    def laplacian(self) -> np.ndarray:
        """ループを除いた重み付きラプラシアン"""
        C = self.conductances.copy()
        np.fill_diagonal(C, 0.0)
        return np.diag(C.sum(axis=1)) - C

    def is_connected(self) -> bool:
        off_diagonal = self.conductances > 0.0
        np.fill_diagonal(off_diagonal, False)
        return nx.is_connected(nx.from_numpy_array(off_diagonal.astype(int)))


@dataclass(frozen=True, eq=False)
class VoltageSolution:
    voltages: np.ndarray
    currents: np.ndarray
    injected: float
    kcl_residual: float

    @property
    def resistance(self) -> float:
        return 1.0 / self.injected


class KirchhoffMethod(Enum):
    RESISTANCE = "a"
    HITTING = "b"
    LAPLACIAN = "c"
    REGULAR = "d"


def walk_from_graph(g: GraphSpec) -> TransitionMatrix:
    """P = D⁻¹A"""
    A = g.adjacency()
    d = A.sum(axis=1)
    if np.any(d <= 0.0):
        zero = np.flatnonzero(d <= 0.0).tolist()
        raise ZeroOutDegree(f"出次数 0 の頂点があります: {zero}", {'vertices': zero})
    return TransitionMatrix(A / d[:, None])


def _require_undirected_connected(g: GraphSpec) -> None:
    if g.directed:
        raise NotUndirected("無向グラフが必要です")
    if not nx.is_connected(g.to_networkx()):
        raise Disconnected("グラフが連結ではありません")


def undirected_stationary(g: GraphSpec) -> ProbabilityVector:
    """π = d / dᵀe"""
    _require_undirected_connected(g)
    d = g.degrees()
    return ProbabilityVector(d / d.sum())


def conductances_from_chain(P: TransitionMatrix, pi: Optional[ProbabilityVector] = None,
                            tol: float = 1e-10) -> Network:
    """C_ij = π_i p_ij (可逆な連鎖のみ)"""
    pi = stationary(P) if pi is None else pi
    flow = pi.entries[:, None] * P.entries
    asymmetry = float(np.max(np.abs(flow - flow.T)))
    if asymmetry >= tol:
        raise NotReversible(f"詳細釣り合いが成り立ちません ({asymmetry:.3e})", {'asymmetry': asymmetry})
    return Network(flow)


def network_from_graph(g: GraphSpec) -> Network:
    if g.directed:
        raise NotUndirected("有向グラフから回路は作れません")
    return Network(g.adjacency())


def _check_pair(net: Network, a: int, b: int) -> Tuple[int, int]:
    a, b = check_state(a, net.m), check_state(b, net.m)
    if a == b:
        raise BadStateIndex(f"a と b は異なる節点が必要です: {a}", {'a': a, 'b': b})
    if not net.is_connected():
        raise SingularNetwork("回路が連結ではありません")
    return a, b


def voltage_solve(net: Network, a: int, b: int) -> VoltageSolution:
    """v_a = 1, v_b = 0 として内部節点の調和方程式を解く"""
    a, b = _check_pair(net, a, b)
    L = net.laplacian()
    interior = [i for i in range(net.m) if i not in (a, b)]

    v = np.zeros(net.m)
    v[a] = 1.0
    if interior:
        try:
            v[interior] = scipy.linalg.solve(L[np.ix_(interior, interior)], -L[interior, a])
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise SingularNetwork(f"電圧方程式が特異です: {exc}") from exc

    C = net.conductances.copy()
    np.fill_diagonal(C, 0.0)
    currents = (v[:, None] - v[None, :]) * C
    net_flow = currents.sum(axis=1)
    kcl = float(np.max(np.abs(net_flow[interior]))) if interior else 0.0
    if kcl >= 1e-9:
        raise SingularNetwork(f"Kirchhoff の電流則が成り立ちません ({kcl:.3e})", {'kcl_residual': kcl})

    return VoltageSolution(voltages=v, currents=currents, injected=float(net_flow[a]), kcl_residual=kcl)


def _resistances_to(net: Network, ground: int) -> np.ndarray:
    # ground を接地したラプラシアンの逆行列の対角が R_{i,ground}
    keep = [i for i in range(net.m) if i != ground]
    L = net.laplacian()[np.ix_(keep, keep)]
    try:
        inverse = scipy.linalg.inv(L)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularNetwork(f"接地ラプラシアンが特異です: {exc}") from exc
    resistances = np.zeros(net.m)
    resistances[keep] = np.diag(inverse)
    return resistances


def effective_resistance(net: Network, a: int, b: int) -> float:
    """b を接地して a に単位電流を流したときの v_a"""
    if check_state(a, net.m) == check_state(b, net.m):
        return 0.0
    a, b = _check_pair(net, a, b)
    keep = [i for i in range(net.m) if i != b]
    rhs = np.zeros(net.m - 1)
    rhs[keep.index(a)] = 1.0
    try:
        potentials = scipy.linalg.solve(net.laplacian()[np.ix_(keep, keep)], rhs, assume_a='sym')
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularNetwork(f"接地ラプラシアンが特異です: {exc}") from exc
    return float(potentials[keep.index(a)])


def resistance_matrix(net: Network) -> np.ndarray:
    """ラプラシアンの擬似逆行列による全節点間の実効抵抗"""
    if not net.is_connected():
        raise SingularNetwork("回路が連結ではありません")
    pseudo = scipy.linalg.pinv(net.laplacian())
    diag = np.diag(pseudo)
    R = diag[:, None] + diag[None, :] - 2 * pseudo
    np.fill_diagonal(R, 0.0)
    return (R + R.T) / 2


def hitting_time_via_resistance(net: Network, a: int, b: int) -> float:
    """E_a T_b = ½ Σ_i C_i (R_ab + R_bi − R_ai)"""
    if check_state(a, net.m) == check_state(b, net.m):
        return 0.0
    a, b = _check_pair(net, a, b)
    to_b = _resistances_to(net, b)
    to_a = _resistances_to(net, a)
    terms = to_b[a] + to_b - to_a
    if np.min(terms) < -1e-10:
        logger.warning("抵抗の三角不等式が破れています", minimum=float(np.min(terms)))
    return float(0.5 * net.node_totals @ terms)


def absorption_probabilities(P: TransitionMatrix, a: int, b: int) -> np.ndarray:
    """b より先に a に到達する確率 (吸収連鎖の線形方程式)"""
    a, b = check_state(a, P.m), check_state(b, P.m)
    if a == b:
        raise BadStateIndex(f"a と b は異なる状態が必要です: {a}")
    interior = [i for i in range(P.m) if i not in (a, b)]
    h = np.zeros(P.m)
    h[a] = 1.0
    if interior:
        system = np.eye(len(interior)) - P.entries[np.ix_(interior, interior)]
        try:
            h[interior] = scipy.linalg.solve(system, P.entries[interior, a])
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise SingularNetwork(f"吸収方程式が特異です: {exc}") from exc
    return h


def _require_simple(g: GraphSpec) -> None:
    _require_undirected_connected(g)
    pairs = [frozenset((i, j)) for i, j, _ in g.edges]
    if any(i == j for i, j, _ in g.edges):
        raise NotSimpleGraph("ループを含むグラフには Kirchhoff 指数を定義しません")
    if len(set(pairs)) != len(pairs):
        raise NotSimpleGraph("多重辺を含むグラフには Kirchhoff 指数を定義しません")


def is_regular(g: GraphSpec, tol: float = 1e-12) -> bool:
    d = g.degrees()
    return bool(np.max(d) - np.min(d) <= tol)


def kirchhoff_index(g: GraphSpec, method: KirchhoffMethod = KirchhoffMethod.RESISTANCE) -> float:
    """Kf(G) = Σ_{i<j} R_ij を指定の方法で計算する"""
    _require_simple(g)
    m = g.m

    if method is KirchhoffMethod.RESISTANCE:
        net = network_from_graph(g)
        total = 0.0
        for j in range(1, m):
            total += float(np.sum(_resistances_to(net, j)[:j]))
        return total

    if method is KirchhoffMethod.HITTING:
        # 重み付きでは 2|E| を次数和に置き換える
        M = mfpt_direct(walk_from_graph(g)).as_modified()
        return float(M.entries.sum() / g.degrees().sum())

    if method is KirchhoffMethod.LAPLACIAN:
        mu = scipy.linalg.eigvalsh(network_from_graph(g).laplacian())
        if mu[1] <= 1e-10:
            raise Disconnected("ラプラシアンの第 2 固有値が 0 です")
        return float(m * np.sum(1.0 / mu[1:]))

    if not is_regular(g):
        raise NotRegular("方法 d には正則グラフが必要です", {'degrees': g.degrees().tolist()})
    d = float(g.degrees()[0])
    P = walk_from_graph(g)
    trace = float(np.trace(fundamental_matrix(P, stationary(P)).matrix))
    return (m / d) * (trace - 1.0)


def kirchhoff_all(g: GraphSpec, methods: Optional[Sequence[KirchhoffMethod]] = None,
                  tol: float = 1e-7) -> Dict[str, float]:
    """適用可能な方法すべて (d は正則グラフのみ) で計算し、一致を確認する"""
    if methods is None:
        methods = [KirchhoffMethod.RESISTANCE, KirchhoffMethod.HITTING, KirchhoffMethod.LAPLACIAN]
        if not g.directed and is_regular(g):
            methods.append(KirchhoffMethod.REGULAR)
    values = {method.value: kirchhoff_index(g, method) for method in methods}
    spread = max(values.values()) - min(values.values())
    if spread >= tol * max(1.0, max(values.values())):
        logger.warning("Kirchhoff 指数の方法間で不一致", values=values, spread=spread)
    return values


def commute_identity_residual(g: GraphSpec) -> Optional[float]:
    """max |E_iT_j + E_jT_i − 2|E|R_ij| (重み付きグラフでは None)"""
    _require_undirected_connected(g)
    if not g.unweighted or any(i == j for i, j, _ in g.edges):
        logger.info("重み付きまたはループ付きグラフなので可換時間の恒等式は省略")
        return None
    M = mfpt_direct(walk_from_graph(g)).as_modified().entries
    R = resistance_matrix(network_from_graph(g))
    return float(np.max(np.abs(M + M.T - 2 * g.edge_count * R)))


def longest_cycle_length(g: GraphSpec) -> int:
    graph = g.to_networkx()
    if not g.directed:
        graph = graph.to_directed()
    return max((len(cycle) for cycle in nx.simple_cycles(graph)), default=0)


def kirkland_mu(g: GraphSpec) -> float:
    """μ(D) = (2m − k − 1)/2 (k は最長閉路の長さ)"""
    limit = Config.MAX_CYCLE_SEARCH_NODES
    if g.m > limit:
        raise TooLargeForExactCycleSearch(
            f"頂点数 {g.m} は閉路の全探索の上限 {limit} を超えています", {'m': g.m, 'limit': limit}
        )
    graph = g.to_networkx()
    if g.directed and not nx.is_strongly_connected(graph):
        raise NotStronglyConnected("強連結な有向グラフが必要です")
    if not g.directed and not nx.is_connected(graph):
        raise NotStronglyConnected("連結なグラフが必要です")

    k = longest_cycle_length(g)
    logger.debug("最長閉路", m=g.m, k=k)
    return (2 * g.m - k - 1) / 2


def pairwise_resistances(net: Network) -> List[Tuple[int, int, float]]:
    R = resistance_matrix(net)
    return [(i, j, float(R[i, j])) for i in range(net.m) for j in range(i + 1, net.m)]

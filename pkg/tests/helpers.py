"""
テスト用のランダム連鎖・グラフ生成
"""

import networkx as nx
import numpy as np

from src.markov.chain_core import TransitionMatrix
from src.markov.graph_electric import GraphSpec


def two_state(a: float, b: float) -> TransitionMatrix:
    return TransitionMatrix([[1.0 - a, a], [b, 1.0 - b]])


def period_cycle(m: int) -> TransitionMatrix:
    return TransitionMatrix(np.roll(np.eye(m), 1, axis=1))


def random_irreducible_chain(rng: np.random.Generator, m: int, density: float = 0.6) -> TransitionMatrix:
    """ランダムな疎行列に巡回置換を足して既約にする"""
    weights = rng.uniform(0.1, 1.0, (m, m)) * (rng.random((m, m)) < density)
    order = rng.permutation(m)
    for k in range(m):
        weights[order[k], order[(k + 1) % m]] += rng.uniform(0.1, 1.0)
    return TransitionMatrix(weights / weights.sum(axis=1, keepdims=True))


def random_permutation_cycle(rng: np.random.Generator, m: int) -> TransitionMatrix:
    order = rng.permutation(m)
    P = np.zeros((m, m))
    for k in range(m):
        P[order[k], order[(k + 1) % m]] = 1.0
    return TransitionMatrix(P)


def random_chains(seed: int, count: int, m_range=(2, 8)):
    """既約な連鎖の列 (5 本に 1 本は周期的な巡回置換)"""
    rng = np.random.default_rng(seed)
    for index in range(count):
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        if index % 5 == 4:
            yield random_permutation_cycle(rng, m)
        else:
            yield random_irreducible_chain(rng, m)


def random_conductances(rng: np.random.Generator, m: int) -> np.ndarray:
    """連結な対称コンダクタンス行列 (ループ付き)"""
    C = np.triu(rng.uniform(0.1, 1.0, (m, m)) * (rng.random((m, m)) < 0.5))
    for k in range(m - 1):
        C[k, k + 1] += rng.uniform(0.1, 1.0)
    return C + np.triu(C, 1).T


def random_reversible_chain(rng: np.random.Generator, m: int) -> TransitionMatrix:
    C = random_conductances(rng, m)
    return TransitionMatrix(C / C.sum(axis=1, keepdims=True))


def random_connected_graph(rng: np.random.Generator, m: int, p: float = 0.4,
                           weighted: bool = False) -> GraphSpec:
    """全域木 + ランダムな辺 (単純グラフ)"""
    pairs = set()
    for k in range(1, m):
        pairs.add((int(rng.integers(k)), k))
    for i in range(m):
        for j in range(i + 1, m):
            if rng.random() < p:
                pairs.add((i, j))
    edges = tuple(
        (i, j, float(rng.uniform(0.5, 2.0)) if weighted else 1.0) for i, j in sorted(pairs)
    )
    return GraphSpec(m, edges, directed=False)


def random_regular_graph(seed: int, m: int, d: int) -> GraphSpec:
    graph = nx.random_regular_graph(d, m, seed=seed)
    while not nx.is_connected(graph):
        seed += 1
        graph = nx.random_regular_graph(d, m, seed=seed)
    return GraphSpec.from_pairs(m, sorted(graph.edges()))


def cycle_graph(m: int, directed: bool = False) -> GraphSpec:
    return GraphSpec.from_pairs(m, [(k, (k + 1) % m) for k in range(m)], directed)


def complete_graph(m: int) -> GraphSpec:
    return GraphSpec.from_pairs(m, [(i, j) for i in range(m) for j in range(i + 1, m)])


def path_graph(m: int) -> GraphSpec:
    return GraphSpec.from_pairs(m, [(k, k + 1) for k in range(m - 1)])

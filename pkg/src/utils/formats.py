"""
入力ファイル形式
行列ファイル・ベクトルファイル・辺リストファイルの読み込み (状態番号はファイル上 1 始まり)
"""

import hashlib
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import structlog

from src.core.errors import ParseError
from src.markov.graph_electric import GraphSpec

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]


def file_digest(path: PathLike) -> str:
    """sha256:<hex>"""
    return 'sha256:' + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding='utf-8')
    except FileNotFoundError as exc:
        raise ParseError(f"ファイルが見つかりません: {path}", {'path': str(path)}) from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"UTF-8 として読めません: {path}", {'path': str(path)}) from exc


def _content_lines(text: str) -> List[Tuple[int, str]]:
    lines = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split('#', 1)[0].strip()
        if stripped:
            lines.append((number, stripped))
    return lines


def _tokens(text: str) -> List[str]:
    return [token for _, line in _content_lines(text) for token in line.split()]


def _count(token: str, what: str) -> int:
    try:
        value = int(token)
    except ValueError as exc:
        raise ParseError(f"{what} が整数ではありません: {token!r}") from exc
    if value < 1:
        raise ParseError(f"{what} は 1 以上が必要です: {value}")
    return value


def _decimals(tokens: List[str], expected: int, what: str) -> np.ndarray:
    if len(tokens) != expected:
        raise ParseError(
            f"{what} の要素数が一致しません: {len(tokens)} (期待値 {expected})",
            {'found': len(tokens), 'expected': expected},
        )
    try:
        return np.array([float(token) for token in tokens])
    except ValueError as exc:
        raise ParseError(f"{what} に数値でない要素があります: {exc}") from exc


def parse_matrix(text: str) -> np.ndarray:
    """先頭トークン m、続いて m·m 個の小数 (行優先)"""
    tokens = _tokens(text)
    if not tokens:
        raise ParseError("行列ファイルが空です")
    m = _count(tokens[0], "状態数 m")
    return _decimals(tokens[1:], m * m, "行列").reshape(m, m)


def parse_vector(text: str) -> np.ndarray:
    """先頭トークン n、続いて n 個の小数"""
    tokens = _tokens(text)
    if not tokens:
        raise ParseError("ベクトルファイルが空です")
    n = _count(tokens[0], "次元 n")
    return _decimals(tokens[1:], n, "ベクトル")


def parse_edges(text: str) -> GraphSpec:
    """ヘッダ "directed" / "undirected" [m]、続いて "i j [w]" (1 始まり)

    m を省略した場合は最大の頂点番号を使う。
    """
    lines = _content_lines(text)
    if not lines:
        raise ParseError("辺リストファイルが空です")

    header_number, header = lines[0]
    parts = header.split()
    kind = parts[0].lower()
    if kind not in ('directed', 'undirected') or len(parts) > 2:
        raise ParseError(
            f"{header_number} 行目: ヘッダは directed または undirected が必要です: {header!r}"
        )
    declared = _count(parts[1], "頂点数 m") if len(parts) == 2 else None

    edges = []
    for number, line in lines[1:]:
        fields = line.split()
        if len(fields) not in (2, 3):
            raise ParseError(f"{number} 行目: 'i j [w]' の形式ではありません: {line!r}")
        try:
            i, j = int(fields[0]), int(fields[1])
            w = float(fields[2]) if len(fields) == 3 else 1.0
        except ValueError as exc:
            raise ParseError(f"{number} 行目: 数値として読めません: {line!r}") from exc
        if i < 1 or j < 1:
            raise ParseError(f"{number} 行目: 頂点番号は 1 始まりです: {line!r}")
        if not w > 0.0:
            raise ParseError(f"{number} 行目: 重みは正が必要です: {w}")
        edges.append((i - 1, j - 1, w))

    if not edges:
        raise ParseError("辺がありません")
    largest = max(max(i, j) for i, j, _ in edges) + 1
    m = declared if declared is not None else largest
    if largest > m:
        raise ParseError(f"頂点番号 {largest} が宣言された頂点数 {m} を超えています")

    logger.debug("辺リストを読み込み", m=m, edges=len(edges), directed=kind == 'directed')
    return GraphSpec(m=m, edges=tuple(edges), directed=kind == 'directed')


def read_matrix(path: PathLike) -> np.ndarray:
    return parse_matrix(_read_text(path))


def read_vector(path: PathLike) -> np.ndarray:
    return parse_vector(_read_text(path))


def read_edges(path: PathLike) -> GraphSpec:
    return parse_edges(_read_text(path))

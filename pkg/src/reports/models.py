"""
解析レポートのモデル
pydantic モデルと JSON への書き出し・読み込み
"""

import json
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from src.config import Config
from src.core.errors import BoundViolation, RouteDisagreement

SCHEMA_VERSION = 1


class StructureSection(BaseModel):
    irreducible: bool
    period: int
    reversible: bool
    regular: bool


class KemenySection(BaseModel):
    K: float
    modified_K: float
    spread: float
    routes: Dict[str, float]
    submatrix_by_state: List[float] = Field(default_factory=list)
    surfer_K: Optional[float] = None


class BoundsSection(BaseModel):
    lower_general: float
    lower_reversible: Optional[float] = None
    lower_levene_loizou: Optional[float] = None
    upper_reversible: Optional[float] = None
    reversible_applicable: bool = False
    upper_applicable: bool = False


class MixingSection(BaseModel):
    start: int
    variant: str
    mean: float
    variance: float
    n: int
    seed: int
    shards: int
    ci_halfwidth_95: float
    variance_se: float


class ClosedFormSection(BaseModel):
    """Return の意味での閉形式 (K と分散ベクトル v)"""
    K: float
    v: List[float]
    eta2: List[float]
    alpha_constant: bool


class PerturbationSection(BaseModel):
    kind: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    l1_shift: float
    norm_inf: float
    norm_col: float
    bound: float
    bound_col: float
    holds: bool
    K: float
    K_bar: float
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class ResistanceEntry(BaseModel):
    a: int
    b: int
    R: float


class GraphSection(BaseModel):
    m: int
    directed: bool
    edges: int
    kirchhoff: Dict[str, float] = Field(default_factory=dict)
    resistances: List[ResistanceEntry] = Field(default_factory=list)
    mu: Optional[float] = None
    longest_cycle: Optional[int] = None


class AnalysisReport(BaseModel):
    """CLI が出力する 1 つの JSON 文書"""

    schema_version: int = SCHEMA_VERSION
    command: str
    input_digest: str
    m: int
    structure: Optional[StructureSection] = None
    pi: Optional[List[float]] = None
    kemeny: Optional[KemenySection] = None
    bounds: Optional[BoundsSection] = None
    mfpt_convention: Optional[str] = None
    mfpt: Optional[List[List[float]]] = None
    mixing: Optional[List[MixingSection]] = None
    closed_form: Optional[ClosedFormSection] = None
    perturbation: Optional[PerturbationSection] = None
    graph: Optional[GraphSection] = None

    def revalidate(self, tol: Optional[float] = None) -> 'AnalysisReport':
        """書き出し前に経路間の一致と境界を再確認する"""
        tol = Config.ROUTE_TOL if tol is None else tol
        if self.kemeny is not None:
            K = self.kemeny.K
            if self.kemeny.spread >= tol * max(1.0, K):
                raise RouteDisagreement(
                    f"経路間の不一致: spread={self.kemeny.spread:.3e}", {'spread': self.kemeny.spread}
                )
            if self.bounds is not None:
                slack = 1e-9 * max(1.0, K)
                violated = K < self.bounds.lower_general - slack
                if self.bounds.lower_reversible is not None:
                    violated |= K < self.bounds.lower_reversible - slack
                if self.bounds.upper_reversible is not None:
                    violated |= K > self.bounds.upper_reversible + slack
                if violated:
                    raise BoundViolation(f"K = {K} が境界を満たしません", self.bounds.model_dump())
        return self


def dump_report(report: AnalysisReport) -> str:
    """フィールド順を保った JSON (浮動小数点は最短の往復可能表記)"""
    return json.dumps(report.model_dump(mode='json'), indent=2, ensure_ascii=False) + '\n'


def load_report(text: str) -> AnalysisReport:
    return AnalysisReport.model_validate_json(text)

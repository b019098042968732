"""
例外定義
マルコフ連鎖解析で共通に使うエラー階層
"""

from typing import Any, Dict, Optional


class MarkovError(Exception):
    """Base exception for chain analysis"""

    exit_code = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class ValidationError(MarkovError):
    """入力・前提条件の検証エラー"""

    exit_code = 2


class NumericalError(MarkovError):
    """数値計算の失敗"""

    exit_code = 3


# --- validation -----------------------------------------------------------

class NotSquare(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NonFiniteEntry(ValidationError):
    pass


class NegativeEntry(ValidationError):
    pass


class RowSumViolation(ValidationError):
    """行和が 1 から外れている"""

    def __init__(self, worst_row: int, residual: float):
        super().__init__(
            f"行 {worst_row} の行和が 1 から {residual:.3e} ずれています",
            {"worst_row": worst_row, "residual": residual},
        )
        self.worst_row = worst_row
        self.residual = residual


class NotIrreducible(ValidationError):
    pass


class BadStateIndex(ValidationError):
    pass


class DegenerateParameters(ValidationError):
    pass


class WrongKind(ValidationError):
    pass


class NotAGInverse(ValidationError):
    pass


class RequiresGeConstant(ValidationError):
    pass


class Reducible(ValidationError):
    pass


class UnknownName(ValidationError):
    pass


class InvalidPerturbation(ValidationError):
    pass


class NotStochasticAfterPerturbation(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class NotSymmetricBase(ValidationError):
    pass


class PreconditionViolated(ValidationError):
    pass


class ZeroOutDegree(ValidationError):
    pass


class NotUndirected(ValidationError):
    pass


class NotSimpleGraph(ValidationError):
    pass


class Disconnected(ValidationError):
    pass


class NotReversible(ValidationError):
    pass


class NotRegular(ValidationError):
    pass


class NotStronglyConnected(ValidationError):
    pass


class TooLargeForExactCycleSearch(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class InvalidSampleCount(ValidationError):
    pass


# --- numerical ------------------------------------------------------------

class EigenFailure(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class SingularSubmatrix(NumericalError):
    pass


class SingularNetwork(NumericalError):
    pass


class Inconsistent(NumericalError):
    """A A⁻ C = C が成り立たない"""

    def __init__(self, residual: float):
        super().__init__(
            f"連立方程式が不整合です (residual={residual:.3e})",
            {"residual": residual},
        )
        self.residual = residual


class ConstancyViolation(NumericalError):
    pass


class EigenvalueAtOneRepeated(NumericalError):
    pass


class NonTermination(NumericalError):
    pass


class RouteDisagreement(NumericalError):
    pass


class BoundViolation(NumericalError):
    pass

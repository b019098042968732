"""
マルコフ連鎖と Kemeny 定数の解析パッケージ
"""

from src.markov.chain_core import (
    ChainStructure,
    ProbabilityVector,
    SpectrumSummary,
    TransitionMatrix,
    classify,
    spectrum,
    stationary,
    validate_stochastic,
)
from src.markov.ginverse import GInverse, GInverseKind, fundamental_matrix, group_inverse, parametric_ginverse
from src.markov.kemeny import KemenyReport, analyze_kemeny, kemeny_bounds
from src.markov.passage import Convention, MFPTMatrix, mfpt_direct, mfpt_from_ginverse

__all__ = [
    'ChainStructure',
    'Convention',
    'GInverse',
    'GInverseKind',
    'KemenyReport',
    'MFPTMatrix',
    'ProbabilityVector',
    'SpectrumSummary',
    'TransitionMatrix',
    'analyze_kemeny',
    'classify',
    'fundamental_matrix',
    'group_inverse',
    'kemeny_bounds',
    'mfpt_direct',
    'mfpt_from_ginverse',
    'parametric_ginverse',
    'spectrum',
    'stationary',
    'validate_stochastic',
]

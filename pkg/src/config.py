"""
設定管理モジュール
"""

import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    """解析ライブラリ設定"""

    # 確率行列の判定
    STOCHASTIC_TOL = float(os.getenv('KEMENY_STOCHASTIC_TOL', '1e-12'))
    ZERO_THRESHOLD = float(os.getenv('KEMENY_ZERO_THRESHOLD', '1e-14'))
    REVERSIBLE_TOL = float(os.getenv('KEMENY_REVERSIBLE_TOL', '1e-10'))

    # g-inverse / Kemeny 定数
    GINVERSE_TOL = float(os.getenv('KEMENY_GINVERSE_TOL', '1e-8'))
    CONSTANCY_TOL = float(os.getenv('KEMENY_CONSTANCY_TOL', '1e-9'))
    ROUTE_TOL = float(os.getenv('KEMENY_ROUTE_TOL', '1e-7'))
    CONDITION_WARN = float(os.getenv('KEMENY_CONDITION_WARN', '1e12'))

    # モンテカルロ設定
    DEFAULT_SEED = int(os.getenv('KEMENY_SEED', '42'))
    DEFAULT_SAMPLES = int(os.getenv('KEMENY_SAMPLES', '100000'))
    MAX_MIXING_STEPS = int(float(os.getenv('KEMENY_MAX_MIXING_STEPS', '1e9')))

    # 有向グラフの最長閉路探索
    MAX_CYCLE_SEARCH_NODES = int(os.getenv('KEMENY_MAX_CYCLE_NODES', '20'))

    # ログ設定
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FORMAT = os.getenv('LOG_FORMAT', 'console')

    @classmethod
    def validate(cls):
        """設定値の検証"""
        positive_vars = [
            'STOCHASTIC_TOL',
            'ZERO_THRESHOLD',
            'REVERSIBLE_TOL',
            'GINVERSE_TOL',
            'CONSTANCY_TOL',
            'ROUTE_TOL',
            'CONDITION_WARN',
            'DEFAULT_SAMPLES',
            'MAX_MIXING_STEPS',
            'MAX_CYCLE_SEARCH_NODES',
        ]

        invalid = [var for var in positive_vars if not getattr(cls, var) > 0]
        if cls.LOG_LEVEL.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            invalid.append('LOG_LEVEL')
        if cls.LOG_FORMAT not in ('console', 'json'):
            invalid.append('LOG_FORMAT')

        if invalid:
            raise ValueError(f"不正な設定値があります: {', '.join(invalid)}")

        return True

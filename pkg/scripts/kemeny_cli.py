#!/usr/bin/env python3
"""
Kemeny 定数解析 コマンドライン実行ツール
"""

import sys
from pathlib import Path

# プロジェクトパスを追加
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from src.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())

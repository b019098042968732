"""
共通基盤 (例外・ログ設定)
"""

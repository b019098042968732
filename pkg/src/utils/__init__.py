"""
入出力ユーティリティ
"""

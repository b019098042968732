"""
解析レポート
"""

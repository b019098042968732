"""
Kemeny 定数とマルコフ連鎖の解析ツールキット
"""

"""
sav_gl 测试包
"""

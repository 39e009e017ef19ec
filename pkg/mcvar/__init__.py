"""
mcvar

Sparse Multi-class Vector AutoRegression with fused penalties and
commodity effect networks.
"""

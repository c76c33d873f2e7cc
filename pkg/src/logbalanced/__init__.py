"""Exact and Monte Carlo tools for log-balanced interval partitions of [0, 1].

Families of partitions (b-ary, beta, continued fractions, Farey, Stern-Brocot,
three-distance, synthetic), their cells as exact rational intervals, Lochs
indexes between pairs of families, Sturmian words, and the statistical
experiments that check the weight-function limits.
"""
__version__ = "0.1.0"

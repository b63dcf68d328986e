"""
pWhile Expected-Cost Analyzer

Upper bounds on the expected cost of probabilistic while programs, certified
by template constraints and cross-checked against an exhaustive oracle.
"""

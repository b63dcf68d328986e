"""
Core layer: the language, its semantics, expectation transformers and loop analysis.
"""

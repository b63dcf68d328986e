"""
Infrastructure layer: program parsing, file access and the bundled corpus.
"""

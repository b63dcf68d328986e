"""
Presentation layer: HTTP endpoints, API models and the command-line interface.
"""

#!/usr/bin/env python3
"""
Command-line entry point: ``python pwhile.py analyze data/countdown.pw``.
"""

from app.presentation.cli import main

if __name__ == "__main__":
    main()

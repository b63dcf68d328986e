"""
Repository for the bundled corpus of example programs.
"""

import logging
import os
from typing import List, Optional

logger = logging.getLogger(__name__)

DEFAULT_CORPUS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), 'data')


class ProgramCorpusRepository:
    """Locates program and invariant files of a corpus directory."""

    def __init__(self, root: Optional[str] = None):
        self.root = root or DEFAULT_CORPUS_DIR

    def list_programs(self, directory: Optional[str] = None) -> List[str]:
        """
        List program files sorted by path.

        Args:
            directory: Directory to scan; the corpus root when omitted

        Returns:
            List[str]: Paths of ``.pw`` files
        """
        directory = directory or self.root
        if not os.path.isdir(directory):
            raise FileNotFoundError(f"Corpus directory not found: {directory}")
        paths = sorted(os.path.join(directory, name) for name in os.listdir(directory) if name.endswith('.pw'))
        logger.info(f"Found {len(paths)} program(s) in {directory}")
        return paths

    def program_path(self, name: str) -> str:
        path = os.path.join(self.root, name if name.endswith('.pw') else f"{name}.pw")
        if not os.path.isfile(path):
            raise FileNotFoundError(f"Corpus program not found: {name}")
        return path

    def invariant_path(self, name: str) -> str:
        path = os.path.join(self.root, name if name.endswith('.inv') else f"{name}.inv")
        if not os.path.isfile(path):
            raise FileNotFoundError(f"Invariant file not found: {name}")
        return path

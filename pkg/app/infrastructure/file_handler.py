"""
File handling infrastructure for program and invariant files.
"""

import logging
import os
from typing import Dict, List

from fastapi import UploadFile

from app.core.exceptions import InvariantFileError, ProgramSyntaxError
from app.core.syntax import CostExpr
from app.infrastructure.program_parser import parse_cost_expr

logger = logging.getLogger(__name__)

# Valid program file extensions
PROGRAM_EXTENSIONS = {'.pw'}

# Valid invariant file extensions
INVARIANT_EXTENSIONS = {'.inv'}

# Maximum upload size (1MB)
MAX_FILE_SIZE = 1024 * 1024


class ProgramFileHandler:
    """Handles program file validation, reading, and invariant files."""

    @staticmethod
    def validate_program_upload(file: UploadFile) -> bool:
        """
        Validate an uploaded program file by extension, size and encoding.

        Args:
            file: Uploaded file object

        Returns:
            bool: True if the upload looks like a program file, False otherwise
        """
        try:
            if not file.filename:
                logger.error("No filename provided")
                return False

            extension = os.path.splitext(file.filename)[1].lower()
            if extension not in PROGRAM_EXTENSIONS:
                logger.error(f"Invalid file extension: {extension}")
                return False

            file.file.seek(0, 2)
            size = file.file.tell()
            file.file.seek(0)
            if size > MAX_FILE_SIZE:
                logger.error(f"File too large: {size} bytes")
                return False

            file.file.read().decode('utf-8')
            file.file.seek(0)
            logger.info(f"Program file validation successful: {file.filename}")
            return True

        except UnicodeDecodeError:
            logger.error(f"Program file is not UTF-8: {file.filename}")
            return False

    @staticmethod
    def read_upload(file: UploadFile) -> str:
        file.file.seek(0)
        content = file.file.read().decode('utf-8')
        file.file.seek(0)
        return content

    @staticmethod
    def get_supported_formats() -> List[str]:
        return sorted(PROGRAM_EXTENSIONS | INVARIANT_EXTENSIONS)

    @staticmethod
    def read_file_content(file_path: str) -> str:
        """
        Read file content as string.

        Args:
            file_path: Path to the file

        Returns:
            str: File content
        """
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                return f.read()
        except OSError as e:
            logger.error(f"Error reading file {file_path}: {str(e)}")
            raise

    @staticmethod
    def file_exists(file_path: str) -> bool:
        return os.path.isfile(file_path)

    @staticmethod
    def parse_invariants(text: str) -> Dict[str, CostExpr]:
        """
        Parse an invariant file: one ``label: cost-expression`` per line.

        Blank lines and ``#`` comments are ignored.

        Args:
            text: File content

        Returns:
            Dict[str, CostExpr]: Candidate invariant per loop label

        Raises:
            InvariantFileError: malformed lines, duplicate labels, or unparsable expressions
        """
        invariants: Dict[str, CostExpr] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            label, separator, expression = line.partition(':')
            label = label.strip()
            if not separator or not label:
                raise InvariantFileError(f"line {number}: expected 'label: expression'")
            if label in invariants:
                raise InvariantFileError(f"line {number}: duplicate label {label}")
            try:
                invariants[label] = parse_cost_expr(expression)
            except ProgramSyntaxError as e:
                raise InvariantFileError(f"line {number}: {e}") from e
        logger.info(f"Parsed {len(invariants)} invariant(s)")
        return invariants

"""JSON-file implementation of the document repository."""

import json
import logging
from pathlib import Path
from typing import Any

from fairlip.data.documents import InstanceDocument, MappingDocument
from fairlip.domain.parity import TransportPlan
from fairlip.domain.repository import IDocumentRepository
from fairlip.errors import DocumentError
from fairlip.infrastructure.schema import (
    dumps,
    mapping_to_dict,
    parse_instance,
    parse_mapping,
    plan_to_dict,
    rounded,
)
from fairlip.settings import DEFAULT_PRECISION

log = logging.getLogger(__name__)


class JsonDocumentRepository(IDocumentRepository):
    """Reads and writes documents as UTF-8 JSON files."""

    def __init__(self, precision: int = DEFAULT_PRECISION) -> None:
        """Initialize the repository.

        Args:
            precision: Significant digits kept for floats when writing

        """
        self.precision = precision

    def _read(self, path: Path) -> Any:
        path = Path(path)
        log.debug(f"Reading {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise DocumentError(f"{path}: not valid JSON ({e.msg} at line {e.lineno})") from e
        except (OSError, UnicodeDecodeError) as e:
            raise DocumentError(f"{path}: {e}") from e

    def _write(self, path: Path, document: dict[str, Any]) -> None:
        path = Path(path)
        log.debug(f"Writing {path}")
        path.write_text(dumps(document), encoding='utf-8')

    def load_instance(self, path: Path) -> InstanceDocument:
        data = self._read(path)
        try:
            return parse_instance(data)
        except DocumentError as e:
            raise DocumentError(f"{path}: {e}") from e

    def load_mapping(self, path: Path) -> MappingDocument:
        data = self._read(path)
        try:
            return parse_mapping(data)
        except DocumentError as e:
            raise DocumentError(f"{path}: {e}") from e

    def save_mapping(self, path: Path, mapping: MappingDocument) -> None:
        self._write(path, mapping_to_dict(mapping, self.precision))

    def save_plan(self, path: Path, plan: TransportPlan, individuals: tuple[str, ...]) -> None:
        self._write(path, plan_to_dict(plan, individuals, self.precision))

    def save_report(self, path: Path, report: dict[str, Any]) -> None:
        self._write(path, rounded(report, self.precision))

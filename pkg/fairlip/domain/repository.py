"""Repository interface for instance, mapping and report documents.

The interface is defined in the domain layer, while the implementation is in
the infrastructure layer. This keeps the algorithms independent of file
formats.

"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

from fairlip.data.documents import InstanceDocument, MappingDocument
from fairlip.domain.parity import TransportPlan


class IDocumentRepository(ABC):
    """Interface for reading and writing fairlip documents."""

    @abstractmethod
    def load_instance(self, path: Path) -> InstanceDocument:
        """Read and validate an instance file.

        Args:
            path: The file to read

        Returns:
            The parsed instance

        Raises:
            DocumentError: if the file cannot be read or is invalid

        """
        pass

    @abstractmethod
    def load_mapping(self, path: Path) -> MappingDocument:
        """Read and validate a mapping file.

        Args:
            path: The file to read

        Returns:
            The parsed mapping, rows renormalised

        """
        pass

    @abstractmethod
    def save_mapping(self, path: Path, mapping: MappingDocument) -> None:
        """Write a mapping file.

        Args:
            path: The destination
            mapping: The mapping to write

        """
        pass

    @abstractmethod
    def save_plan(self, path: Path, plan: TransportPlan, individuals: tuple[str, ...]) -> None:
        """Write an Earthmover transport plan.

        Args:
            path: The destination
            plan: The optimal plan
            individuals: Labels of the plan's rows and columns

        """
        pass

    @abstractmethod
    def save_report(self, path: Path, report: dict[str, Any]) -> None:
        """Write a report as a document.

        Args:
            path: The destination
            report: Plain values (numbers, strings, lists, dictionaries)

        """
        pass

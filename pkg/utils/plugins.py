"""
Plugin architecture for output writers.

Machine output (reports, traces, bench summaries) goes through a registry of
writers so new formats can be added without touching the CLI.
"""
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence, TextIO, Union

logger: logging.Logger = logging.getLogger(__name__)

Document = Union[Dict[str, Any], Sequence[Dict[str, Any]]]


class ReportWriter(ABC):
    """
    Abstract base class for output writers.

    Attributes:
        name: Unique identifier used by ``--format``-style options
        description: Human-readable description of the format
    """

    name: str = "base"
    description: str = "Base report writer"

    @abstractmethod
    def write(self, document: Document, stream: TextIO, **options: Any) -> None:
        """
        Write ``document`` to ``stream``.

        Args:
            document: A JSON-ready mapping, or a list of flat rows
            stream: Open text stream (stdout or a file)
            **options: Writer-specific options

        Raises:
            ValueError: If the writer cannot represent the document
        """
        pass


class WriterRegistry:
    """
    Registry of report writers keyed by name.

    Example:
        >>> registry = WriterRegistry()
        >>> registry.register(JSONWriter())
        >>> registry.get('json').write(report.document(), sys.stdout)
    """

    def __init__(self) -> None:
        self._writers: Dict[str, ReportWriter] = {}

    def register(self, writer: ReportWriter) -> None:
        """
        Register a writer.

        Raises:
            ValueError: If a writer with the same name is already registered
        """
        if writer.name in self._writers:
            raise ValueError(f"Writer '{writer.name}' already registered")
        self._writers[writer.name] = writer
        logger.debug(f"Registered writer: {writer.name} - {writer.description}")

    def get(self, name: str) -> Optional[ReportWriter]:
        return self._writers.get(name)

    def require(self, name: str) -> ReportWriter:
        """Like :meth:`get` but raises ValueError listing the known writers."""
        writer = self._writers.get(name)
        if writer is None:
            known = ", ".join(self.names()) or "none"
            raise ValueError(f"Unknown writer '{name}'. Available: {known}")
        return writer

    def names(self) -> List[str]:
        return sorted(self._writers)

    def list_writers(self) -> Dict[str, str]:
        """Writer names mapped to their descriptions."""
        return {name: writer.description for name, writer in self._writers.items()}

    def __repr__(self) -> str:
        return f"WriterRegistry(writers={list(self._writers.keys())})"


_default_registry: Optional[WriterRegistry] = None


def get_default_registry() -> WriterRegistry:
    """
    The global registry, created on first use with the built-in writers.

    Example:
        >>> get_default_registry().names()
        ['csv', 'json']
    """
    global _default_registry
    if _default_registry is None:
        from plugins import CSVWriter, JSONWriter

        _default_registry = WriterRegistry()
        _default_registry.register(JSONWriter())
        _default_registry.register(CSVWriter())
    return _default_registry

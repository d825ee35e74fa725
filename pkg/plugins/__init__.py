"""
Built-in report writers.

``json`` writes any JSON-ready document; ``csv`` writes flat rows such as the
bench summary.
"""
import csv
import json
import logging
from typing import Any, Dict, List, Sequence, TextIO

from utils.plugins import Document, ReportWriter

logger: logging.Logger = logging.getLogger(__name__)


class JSONWriter(ReportWriter):
    """
    JSON output writer.

    Keys keep the order of the pydantic models that produced them, so equal
    inputs give byte-identical output.
    """

    name = "json"
    description = "JSON document (default format)"

    def write(self, document: Document, stream: TextIO, **options: Any) -> None:
        indent = options.get("indent", 2)
        json.dump(document, stream, indent=indent, ensure_ascii=False)
        stream.write("\n")


class CSVWriter(ReportWriter):
    """CSV writer for lists of flat rows; the header is the first row's keys."""

    name = "csv"
    description = "CSV table of flat rows"

    def write(self, document: Document, stream: TextIO, **options: Any) -> None:
        if isinstance(document, dict):
            raise ValueError("CSV output needs a list of rows, got a single document")
        rows: List[Dict[str, Any]] = list(document)
        fieldnames: Sequence[str] = options.get("fieldnames") or (list(rows[0]) if rows else [])
        writer = csv.DictWriter(stream, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        logger.debug(f"Wrote {len(rows)} CSV row(s)")

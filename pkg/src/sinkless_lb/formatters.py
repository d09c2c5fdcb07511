"""Output formatting utilities."""

import json
from typing import Any, List, Optional

from tabulate import tabulate


class OutputFormatter:
    """Format command results as table, JSON or text."""

    def __init__(self, format_type: str = "table"):
        """
        Initialize formatter.

        Args:
            format_type: Output format (table, json, text, dot)
        """
        self.format_type = format_type

    def format(self, data: Any, headers: Optional[List[str]] = None) -> str:
        """
        Format data based on output type.

        DOT output is produced by the serialization module; a formatter asked
        for "dot" on tabular data falls back to text.
        """
        if self.format_type == "json":
            return format_json(data)
        elif self.format_type in ("text", "dot"):
            return format_text(data)
        else:
            return format_table(data, headers)


def format_table(data: Any, headers: Optional[List[str]] = None) -> str:
    """
    Format data as a table.

    Args:
        data: Data to format (dict, list of dicts, or list of lists)
        headers: Column headers

    Returns:
        Formatted table string
    """
    if data is None or (hasattr(data, "__len__") and len(data) == 0):
        return "No data"

    if isinstance(data, dict):
        rows = [[k, _cell(v)] for k, v in data.items()]
        return tabulate(rows, headers=["Field", "Value"], tablefmt="simple")

    if isinstance(data, list) and isinstance(data[0], dict):
        if not headers:
            headers = list(data[0].keys())
        rows = [[_cell(item.get(h, "")) for h in headers] for item in data]
        return tabulate(rows, headers=headers, tablefmt="simple")

    if isinstance(data, list):
        return tabulate(data, headers=headers or [], tablefmt="simple")

    return str(data)


def format_json(data: Any, indent: int = 2) -> str:
    """
    Format data as JSON with sorted keys.

    Integers of any size stay exact; sets become sorted lists.
    """
    return json.dumps(data, indent=indent, sort_keys=True, default=_json_default)


def format_text(data: Any) -> str:
    """Format data as plain text."""
    if data is None:
        return ""

    if isinstance(data, dict):
        return "\n".join(f"{k}: {_cell(v)}" for k, v in data.items())

    if isinstance(data, list):
        if data and isinstance(data[0], dict):
            return "\n\n".join(format_text(item) for item in data)
        return "\n".join(str(item) for item in data)

    return str(data)


def _cell(value: Any) -> str:
    if isinstance(value, (set, frozenset)):
        return ", ".join(sorted(str(v) for v in value)) or "-"
    if isinstance(value, (list, tuple)):
        return ", ".join(str(v) for v in value)
    if isinstance(value, int) and value.bit_length() > 64:
        return f"<{value.bit_length()}-bit integer>"
    return str(value)


def _json_default(value: Any) -> Any:
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return str(value)

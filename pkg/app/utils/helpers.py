"""
Helper utilities for BroadcastBench
"""
import csv
import io
from datetime import datetime
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence


def format_rat(value: Optional[Fraction]) -> str:
    """Serialize a rational as "p" or "p/q" (empty string for None)"""
    if value is None:
        return ""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_cell(value) -> str:
    """Render one CSV/table cell; rationals use the file encoding"""
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return format_rat(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Render rows as CSV text with a fixed header"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(cell) for cell in row])
    return buffer.getvalue()


def format_table(rows: List[Sequence[str]]) -> str:
    """Left-aligned plain text table for terminal summaries"""
    if not rows:
        return ""
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for row in rows:
        lines.append("  ".join(str(cell).ljust(width) for cell, width in zip(row, widths)).rstrip())
    return "\n".join(lines)


def format_timestamp(dt: datetime = None) -> str:
    """Format datetime for API responses"""
    if dt is None:
        dt = datetime.utcnow()
    return dt.isoformat()


def ceil_fraction(value: Fraction) -> int:
    """Exact ceiling of a rational"""
    return -((-value.numerator) // value.denominator)

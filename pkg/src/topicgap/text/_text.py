"""
Utilities for rendering tables.
"""
import logging
import math
from typing import Any, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..api import AllTracker

log = logging.getLogger(__name__)


#
# Exported names
#

__all__ = ["format_number", "format_table", "format_markdown_table"]


#
# Ensure all symbols introduced below are included in __all__
#

__tracker = AllTracker(globals())


_ALIGNMENT_OPTIONS = ["<", "^", ">"]

_Data = Union[pd.DataFrame, Sequence[Sequence[Any]]]


def format_number(value: Any) -> str:
    """
    Render a value for display, with 6 significant digits for floats.

    :param value: the value
    :return: the rendered value; ``"NA"`` for missing numbers
    """
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return "NA" if math.isnan(value) else f"{value:.6g}"
    return str(value)


def format_table(
    headings: Sequence[str],
    data: _Data,
    alignment: Optional[Sequence[str]] = None,
) -> str:
    """
    Render a table as aligned plain text, with a divider below the headings.

    :param headings: the table headings
    :param data: the table rows; data frames are rendered without their index
    :param alignment: text alignment for each column (optional); use ``"<"`` to align
        left, ``"^"`` to center, ``">"`` to align right (defaults to left alignment)
    :return: the formatted table as a multi-line string
    """
    rows = _rows(headings, data)
    align = _alignment(headings, alignment)
    widths = [
        max(len(row[column]) for row in [list(headings), *rows])
        for column in range(len(headings))
    ]

    def _line(items: Sequence[str], aligned: bool) -> str:
        return "  ".join(
            f"{item:{a if aligned else '<'}{width}s}"
            for item, a, width in zip(items, align, widths)
        ).rstrip()

    return "\n".join(
        [
            _line(headings, aligned=False),
            _line(["=" * width for width in widths], aligned=False),
            *(_line(row, aligned=True) for row in rows),
            "",
        ]
    )


def format_markdown_table(
    headings: Sequence[str],
    data: _Data,
    alignment: Optional[Sequence[str]] = None,
) -> str:
    """
    Render a table in Markdown pipe syntax.

    :param headings: the table headings
    :param data: the table rows; data frames are rendered without their index
    :param alignment: text alignment for each column (optional), as for
        :func:`.format_table`
    :return: the formatted table as a multi-line string
    """
    rows = _rows(headings, data)
    markers = {"<": ":---", "^": ":---:", ">": "---:"}
    align = _alignment(headings, alignment)

    def _line(items: Iterable[str]) -> str:
        return "| " + " | ".join(item.replace("|", "\\|") for item in items) + " |"

    return "\n".join(
        [_line(headings), _line(markers[a] for a in align), *map(_line, rows), ""]
    )


__tracker.validate()


def _rows(headings: Sequence[str], data: _Data) -> List[List[str]]:
    records: Iterable[Sequence[Any]] = (
        data.itertuples(index=False, name=None)
        if isinstance(data, pd.DataFrame)
        else data
    )
    rows = []
    for record in records:
        if len(record) != len(headings):
            raise ValueError(
                "rows in data must have the same length as arg headings"
            )
        rows.append([format_number(item) for item in record])
    return rows


def _alignment(headings: Sequence[str], alignment: Optional[Sequence[str]]) -> List[str]:
    if alignment is None:
        return ["<"] * len(headings)
    if len(alignment) != len(headings):
        raise ValueError("arg alignment must have the same length as arg headings")
    if not all(a in _ALIGNMENT_OPTIONS for a in alignment):
        raise ValueError(
            f"arg alignment must only contain alignment options "
            f'{", ".join(_ALIGNMENT_OPTIONS)}'
        )
    return list(alignment)

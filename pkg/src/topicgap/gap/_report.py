"""
Rankings of the topics least connected to the other layer.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..api import AllTracker, ConfigurationError
from ._similarity import GapMatrix

log = logging.getLogger(__name__)

__all__ = ["GapEntry", "GapReport", "gap_report"]

#: Number of top words listed per topic in a gap report.
N_REPORT_WORDS = 10

__tracker = AllTracker(globals())


@dataclass(frozen=True)
class GapEntry:
    """
    A topic with its cumulative similarity to the topics of the other layer.
    """

    #: the 0-based index of the topic in its layer
    index: int
    #: the label of the topic
    label: str
    #: the sum of the similarities to all topics of the other layer
    cumulative_similarity: float
    #: the most probable words of the topic
    top_words: Tuple[str, ...]
    #: the label of the most similar topic of the other layer
    best_match: str
    #: the similarity to the most similar topic of the other layer
    best_similarity: float


@dataclass(frozen=True)
class GapReport:
    """
    The topics of both layers with the lowest cumulative similarity to the other
    layer, in ascending order.
    """

    #: the least connected topics of layer A
    gaps_a: Tuple[GapEntry, ...]
    #: the least connected topics of layer B
    gaps_b: Tuple[GapEntry, ...]
    #: the smallest similarity in the matrix
    min_similarity: float
    #: the largest similarity in the matrix
    max_similarity: float

    def to_dict(self, header: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
        """
        :param header: settings to record at the top of the report, e.g. thresholds
            and option hashes
        :return: the report as a JSON-serializable dictionary
        """
        return {
            "header": dict(header or {}),
            "min_similarity": self.min_similarity,
            "max_similarity": self.max_similarity,
            "gaps_a": [_entry_dict(entry) for entry in self.gaps_a],
            "gaps_b": [_entry_dict(entry) for entry in self.gaps_b],
        }

    def save(
        self, path: Union[str, Path], header: Optional[Mapping[str, Any]] = None
    ) -> None:
        """
        Write this report as JSON.

        :param path: the path of the JSON file
        :param header: settings to record at the top of the report
        """
        Path(path).write_text(
            json.dumps(self.to_dict(header), indent=1, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def gap_report(
    s: GapMatrix,
    n: int,
    top_words_a: Optional[Sequence[Sequence[str]]] = None,
    top_words_b: Optional[Sequence[Sequence[str]]] = None,
) -> GapReport:
    """
    Rank the topics of each layer by their cumulative similarity to the other layer,
    and report the ``n`` lowest.

    Ties are broken by topic index.

    :param s: the similarity matrix
    :param n: the number of topics to report per layer
    :param top_words_a: the top words of each layer A topic; at most 10 are listed
    :param top_words_b: the top words of each layer B topic; at most 10 are listed
    :return: the report
    :raise ConfigurationError: ``n`` exceeds the topic count of a layer
    """
    k_a, k_b = s.values.shape
    if not 1 <= n <= min(k_a, k_b):
        raise ConfigurationError(
            f"arg n must be in range [1, {min(k_a, k_b)}] but is {n}"
        )

    rows, columns = s.row_sums, s.column_sums
    return GapReport(
        gaps_a=_rank(s.values, rows, s.labels_a, s.labels_b, top_words_a, n),
        gaps_b=_rank(s.values.T, columns, s.labels_b, s.labels_a, top_words_b, n),
        min_similarity=s.min,
        max_similarity=s.max,
    )


__tracker.validate()


def _rank(
    values: np.ndarray,
    sums: np.ndarray,
    labels: Sequence[str],
    other_labels: Sequence[str],
    top_words: Optional[Sequence[Sequence[str]]],
    n: int,
) -> Tuple[GapEntry, ...]:
    order = sorted(range(len(sums)), key=lambda i: (sums[i], i))[:n]
    entries: List[GapEntry] = []
    for i in order:
        best = int(np.argmax(values[i]))
        entries.append(
            GapEntry(
                index=i,
                label=labels[i],
                cumulative_similarity=float(sums[i]),
                top_words=tuple(top_words[i][:N_REPORT_WORDS]) if top_words else (),
                best_match=other_labels[best],
                best_similarity=float(values[i, best]),
            )
        )
    return tuple(entries)


def _entry_dict(entry: GapEntry) -> Dict[str, Any]:
    record = asdict(entry)
    record["top_words"] = list(entry.top_words)
    return record

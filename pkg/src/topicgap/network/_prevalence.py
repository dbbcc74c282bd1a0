"""
Topic prevalence by covariate level.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..api import AllTracker, DataError

log = logging.getLogger(__name__)

__all__ = ["PrevalenceTable", "prevalence_by_covariate"]

__tracker = AllTracker(globals())


@dataclass(frozen=True, eq=False)
class PrevalenceTable:
    """
    The mean topic proportions of the documents at each level of a covariate.
    """

    #: the covariate levels, one per row
    levels: Tuple[str, ...]
    #: the levels × K matrix of mean topic proportions
    values: np.ndarray

    def to_frame(self, topic_labels: Optional[Sequence[str]] = None) -> pd.DataFrame:
        """
        :param topic_labels: column labels; ``T1``, ``T2``, … if not stated
        :return: the table as a data frame with levels as rows
        """
        n_topics = self.values.shape[1]
        columns = (
            list(topic_labels)
            if topic_labels is not None
            else [f"T{k + 1}" for k in range(n_topics)]
        )
        return pd.DataFrame(
            self.values, index=pd.Index(self.levels, name="level"), columns=columns
        )

    def to_csv(self, path: Union[str, Path]) -> None:
        """
        Write this table as CSV with levels as rows, with 6 significant digits.

        :param path: the path of the CSV file
        """
        self.to_frame().to_csv(path, float_format="%.6g", lineterminator="\n")


def prevalence_by_covariate(
    theta: np.ndarray,
    labels: Sequence[str],
    levels: Optional[Sequence[str]] = None,
) -> PrevalenceTable:
    """
    Average the topic proportions of the documents at each covariate level.

    Levels without documents get a row of ``NaN``.

    :param theta: the D × K topic proportions
    :param labels: the covariate level of each document
    :param levels: the levels in the desired order; the sorted distinct labels if
        not stated
    :return: the prevalence table
    :raise DataError: the number of labels does not match the number of documents,
        or a label is not among the levels
    """
    theta = np.asarray(theta, dtype=np.float64)
    labels = list(labels)
    if len(labels) != len(theta):
        raise DataError(
            f"got {len(labels)} covariate labels for {len(theta)} documents"
        )
    levels = list(levels) if levels is not None else sorted(set(labels))
    unknown = sorted(set(labels) - set(levels))
    if unknown:
        raise DataError(f"covariate labels are not among the levels: {unknown}")

    label_array = np.array(labels, dtype=object)
    values = np.full((len(levels), theta.shape[1]), np.nan)
    for row, level in enumerate(levels):
        selected = label_array == level
        if selected.any():
            values[row] = theta[selected].mean(axis=0)
        else:
            log.warning(f"covariate level {level!r} has no documents")

    return PrevalenceTable(levels=tuple(levels), values=values)


__tracker.validate()

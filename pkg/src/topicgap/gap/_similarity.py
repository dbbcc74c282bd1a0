"""
Cosine similarity of topics across layers.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..api import AllTracker, ConfigurationError, DataError, NumericalError
from ..parallelization import Job, JobRunner
from ._align import UnionVocab

log = logging.getLogger(__name__)

__all__ = [
    "GapMatrix",
    "cosine_similarity",
    "cross_layer_matrix",
    "cumulative_similarity",
]

#: Largest excursion of a cosine outside [0, 1] attributed to rounding.
ROUNDING_TOLERANCE = 1e-12

__tracker = AllTracker(globals())


@dataclass(frozen=True, eq=False)
class GapMatrix:
    """
    Cosine similarities between the topics of layer A (rows) and layer B (columns).
    """

    #: the K_A × K_B similarities
    values: np.ndarray
    #: labels of the layer A topics
    labels_a: Tuple[str, ...]
    #: labels of the layer B topics
    labels_b: Tuple[str, ...]
    #: hash of the tokenizer options of both layers
    options_hash: str
    #: number of top terms each topic was truncated to, or ``None`` for full
    #: distributions
    top_m: Optional[int] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels_a", tuple(self.labels_a))
        object.__setattr__(self, "labels_b", tuple(self.labels_b))
        if values.shape != (len(self.labels_a), len(self.labels_b)):
            raise ValueError(
                f"arg values must have shape ({len(self.labels_a)}, "
                f"{len(self.labels_b)}) but has shape {values.shape}"
            )

    @property
    def row_sums(self) -> np.ndarray:
        """
        The cumulative similarity of each layer A topic.
        """
        return cumulative_similarity(self.values)[0]

    @property
    def column_sums(self) -> np.ndarray:
        """
        The cumulative similarity of each layer B topic.
        """
        return cumulative_similarity(self.values)[1]

    @property
    def min(self) -> float:
        """
        The smallest similarity.
        """
        return float(self.values.min())

    @property
    def max(self) -> float:
        """
        The largest similarity.
        """
        return float(self.values.max())

    def to_frame(self) -> pd.DataFrame:
        """
        :return: the similarities as a data frame, layer A topics as rows
        """
        return pd.DataFrame(
            self.values,
            index=pd.Index(self.labels_a, name="topic"),
            columns=list(self.labels_b),
        )

    def save(self, directory: Union[str, Path]) -> None:
        """
        Write this matrix to files ``gap_matrix.csv`` with 6 significant digits,
        ``gap_matrix.bin`` with the values in full precision as little-endian 64-bit
        floats in row-major order, and ``gap_matrix.json`` with shape, labels and
        options.

        :param directory: the directory; created if it does not exist
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(
            directory / "gap_matrix.csv", float_format="%.6g", lineterminator="\n"
        )
        (directory / "gap_matrix.bin").write_bytes(
            np.ascontiguousarray(self.values, dtype="<f8").tobytes(order="C")
        )
        header: Dict[str, Any] = {
            "shape": list(self.values.shape),
            "labels_a": list(self.labels_a),
            "labels_b": list(self.labels_b),
            "options_hash": self.options_hash,
            "top_m": self.top_m,
        }
        (directory / "gap_matrix.json").write_text(
            json.dumps(header, indent=1, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: Union[str, Path]) -> GapMatrix:
        """
        Read a matrix written by :meth:`.save`.

        :param directory: the directory
        :return: the matrix
        """
        directory = Path(directory)
        header = json.loads((directory / "gap_matrix.json").read_text(encoding="utf-8"))
        values = np.frombuffer(
            (directory / "gap_matrix.bin").read_bytes(), dtype="<f8"
        ).reshape(header["shape"])
        return cls(
            values=values.astype(np.float64),
            labels_a=tuple(header["labels_a"]),
            labels_b=tuple(header["labels_b"]),
            options_hash=header["options_hash"],
            top_m=header["top_m"],
        )


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """
    Compute the cosine of the angle between two non-negative vectors,
    ``sum(a * b) / (sqrt(sum(a²)) sqrt(sum(b²)))``.

    :param a: the first vector
    :param b: the second vector, of the same length
    :return: the similarity, in range [0, 1]
    :raise DataError: a vector is all zeros or has negative entries
    :raise NumericalError: the result is outside [0, 1] beyond rounding noise
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(
            f"args a and b must be vectors of equal length but have shapes "
            f"{a.shape} and {b.shape}"
        )
    if (a < 0).any() or (b < 0).any():
        raise DataError("cosine similarity requires non-negative vectors")
    norm_a = np.sqrt(np.sum(a * a))
    norm_b = np.sqrt(np.sum(b * b))
    if norm_a == 0 or norm_b == 0:
        raise DataError("cosine similarity is undefined for zero vectors")
    return _clamp(float(np.sum(a * b) / (norm_a * norm_b)))


def cross_layer_matrix(
    beta_a: np.ndarray,
    beta_b: np.ndarray,
    union: UnionVocab,
    top_m: Optional[int] = None,
    *,
    labels_a: Optional[Sequence[str]] = None,
    labels_b: Optional[Sequence[str]] = None,
    n_jobs: Optional[int] = None,
) -> GapMatrix:
    """
    Compute the cosine similarity of every pair of topics of two layers, comparing
    topic-word distributions over the union vocabulary.

    If ``top_m`` is set, each topic is first reduced to its ``top_m`` most probable
    terms and renormalized.
    Rows are computed one job each, in parallel threads if ``n_jobs`` is greater
    than 1; the result does not depend on ``n_jobs``.

    :param beta_a: the topic-word probabilities of layer A, over its vocabulary
    :param beta_b: the topic-word probabilities of layer B, over its vocabulary
    :param union: the union of both vocabularies
    :param top_m: the number of top terms per topic, or ``None`` for full
        distributions
    :param labels_a: labels of the layer A topics; ``A1``, ``A2``, … if not stated
    :param labels_b: labels of the layer B topics; ``B1``, ``B2``, … if not stated
    :param n_jobs: number of parallel jobs (default: serial)
    :return: the similarity matrix
    """
    embedded_a = _truncate(union.embed_a(beta_a), top_m)
    embedded_b = _truncate(union.embed_b(beta_b), top_m)

    if (embedded_a.sum(axis=1) == 0).any() or (embedded_b.sum(axis=1) == 0).any():
        raise DataError("cosine similarity is undefined for topics without terms")

    unit_a = embedded_a / np.sqrt(np.sum(embedded_a * embedded_a, axis=1, keepdims=True))
    unit_b = embedded_b / np.sqrt(np.sum(embedded_b * embedded_b, axis=1, keepdims=True))

    @Job.delayed
    def _row(i: int) -> np.ndarray:
        return np.array([np.sum(unit_a[i] * unit_b[j]) for j in range(len(unit_b))])

    rows = JobRunner(n_jobs=n_jobs or 1, shared_memory=True).run_jobs(
        _row(i) for i in range(len(unit_a))
    )
    values = np.array([[_clamp(float(value)) for value in row] for row in rows]).reshape(
        len(unit_a), len(unit_b)
    )

    return GapMatrix(
        values=values,
        labels_a=tuple(labels_a or (f"A{i + 1}" for i in range(len(unit_a)))),
        labels_b=tuple(labels_b or (f"B{j + 1}" for j in range(len(unit_b)))),
        options_hash=union.options_hash,
        top_m=top_m,
    )


def cumulative_similarity(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sum the similarities of each row and each column.

    :param s: the similarity matrix
    :return: the row sums and the column sums
    """
    s = np.asarray(s, dtype=np.float64)
    return s.sum(axis=1), s.sum(axis=0)


__tracker.validate()


def _clamp(value: float) -> float:
    if value < -ROUNDING_TOLERANCE or value > 1.0 + ROUNDING_TOLERANCE:
        raise NumericalError(f"cosine similarity {value!r} is outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def _truncate(beta: np.ndarray, top_m: Optional[int]) -> np.ndarray:
    if top_m is None:
        return beta
    n_terms = beta.shape[1]
    if not 1 <= top_m <= n_terms:
        raise ConfigurationError(f"arg top_m must be in range [1, {n_terms}] but is {top_m}")
    positions = np.arange(n_terms)
    truncated = np.zeros_like(beta)
    for k, row in enumerate(beta):
        top = np.lexsort((positions, -row))[:top_m]
        truncated[k, top] = row[top]
    return truncated / truncated.sum(axis=1, keepdims=True)

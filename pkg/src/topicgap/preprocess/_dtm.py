"""
Document-term matrices with prevalence covariates.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse
from sklearn.feature_extraction.text import CountVectorizer

from ..api import AllTracker, ConfigurationError, DataError
from ..corpus import CorpusLayer, Document, Programme
from ._periods import PeriodTable
from ._tokenize import TokenizerOptions, tokenize_layer
from ._vocabulary import Vocabulary, document_terms

log = logging.getLogger(__name__)

__all__ = ["CovariateSpec", "DocTermMatrix", "vectorize"]

#: Name of the intercept column of every design matrix.
INTERCEPT = "(intercept)"

#: Covariate name resolving to the programme of a project.
COVARIATE_PROGRAMME = "programme"

#: Covariate name resolving to the period label of a document's year.
COVARIATE_PERIOD = "period"

#: Covariate name resolving to the year of a document.
COVARIATE_YEAR = "year"

__tracker = AllTracker(globals())


@dataclass(frozen=True)
class CovariateSpec:
    """
    The document fields used as prevalence covariates.

    Field ``programme`` resolves to the project programme, ``period`` to the label
    of the period containing the document year, and ``year`` to the document year;
    any other name is looked up in the document's pass-through metadata.

    Categorical fields are one-hot encoded, dropping the first level as reference.
    Levels of ``programme`` and ``period`` follow the order of the programmes and
    the period table; levels of other fields are sorted.
    Numeric fields are standardized to zero mean and unit variance.
    """

    #: names of categorical covariate fields
    categorical: Tuple[str, ...] = ()
    #: names of numeric covariate fields
    numeric: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "categorical", tuple(self.categorical))
        object.__setattr__(self, "numeric", tuple(self.numeric))
        overlap = set(self.categorical) & set(self.numeric)
        if overlap:
            raise ConfigurationError(
                f"covariates cannot be both categorical and numeric: "
                f"{', '.join(sorted(overlap))}"
            )

    @property
    def uses_periods(self) -> bool:
        """
        ``True`` if any covariate requires a period table.
        """
        return COVARIATE_PERIOD in self.categorical or COVARIATE_PERIOD in self.numeric


@dataclass(frozen=True, eq=False)
class DocTermMatrix:
    """
    Sparse token counts of D documents over a vocabulary of V terms, with a
    D × P design matrix of prevalence covariates.

    The first covariate column is the intercept.
    """

    #: D × V sparse matrix of token counts
    counts: sparse.csr_matrix
    #: the ids of the documents, one per row
    doc_ids: Tuple[str, ...]
    #: the vocabulary, one term per column
    vocabulary: Vocabulary
    #: D × P design matrix
    covariates: np.ndarray
    #: the names of the P design matrix columns
    covariate_names: Tuple[str, ...]
    #: ids of documents dropped for having too few tokens
    dropped: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        counts = sparse.csr_matrix(self.counts, dtype=np.int64)
        counts.sort_indices()
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "doc_ids", tuple(self.doc_ids))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        covariates = np.asarray(self.covariates, dtype=np.float64)
        object.__setattr__(self, "covariates", covariates)

        n_docs, n_terms = counts.shape
        if n_docs != len(self.doc_ids):
            raise ValueError(
                f"arg doc_ids has {len(self.doc_ids)} entries but counts has "
                f"{n_docs} rows"
            )
        if n_terms != len(self.vocabulary):
            raise ValueError(
                f"vocabulary has {len(self.vocabulary)} terms but counts has "
                f"{n_terms} columns"
            )
        if covariates.ndim != 2 or covariates.shape[0] != n_docs:
            raise ValueError(
                f"arg covariates must have shape ({n_docs}, P) "
                f"but has shape {covariates.shape}"
            )
        if covariates.shape[1] != len(self.covariate_names):
            raise ValueError(
                f"arg covariate_names has {len(self.covariate_names)} entries but "
                f"covariates has {covariates.shape[1]} columns"
            )
        if covariates.shape[1] == 0 or not np.all(covariates[:, 0] == 1.0):
            raise ValueError("the first covariate column must be the intercept")
        if counts.nnz and counts.data.min() < 0:
            raise ValueError("token counts must not be negative")

    @property
    def n_documents(self) -> int:
        """
        The number of documents D.
        """
        return int(self.counts.shape[0])

    @property
    def n_terms(self) -> int:
        """
        The number of vocabulary terms V.
        """
        return int(self.counts.shape[1])

    @property
    def n_covariates(self) -> int:
        """
        The number of design matrix columns P, including the intercept.
        """
        return int(self.covariates.shape[1])

    @property
    def doc_lengths(self) -> np.ndarray:
        """
        The total token count of each document.
        """
        return np.asarray(self.counts.sum(axis=1)).ravel()

    def row(self, d: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Get the observed terms of a document.

        :param d: the document index
        :return: the term indices and their counts
        """
        counts = self.counts
        start, end = counts.indptr[d], counts.indptr[d + 1]
        return counts.indices[start:end], counts.data[start:end].astype(np.float64)

    def subset(self, rows: Sequence[int]) -> DocTermMatrix:
        """
        Select documents by index.

        :param rows: the document indices, in the desired order
        :return: a matrix with the selected rows and the same vocabulary
        """
        rows = list(rows)
        return DocTermMatrix(
            counts=self.counts[rows],
            doc_ids=tuple(self.doc_ids[i] for i in rows),
            vocabulary=self.vocabulary,
            covariates=self.covariates[rows],
            covariate_names=self.covariate_names,
        )

    def save(self, directory: Union[str, Path]) -> None:
        """
        Write this matrix to a directory.

        Files written are ``counts.txt`` with one ``doc_index term_index count``
        triplet per line, ``vocabulary.json``, ``covariates.csv`` with document ids
        and the design matrix, and ``dropped.txt`` with the ids of dropped documents.

        :param directory: the directory; created if it does not exist
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)

        coo = self.counts.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(directory / "counts.txt", "w", encoding="utf-8", newline="\n") as f:
            for d, v, c in zip(coo.row[order], coo.col[order], coo.data[order]):
                f.write(f"{d} {v} {c}\n")

        self.vocabulary.save(directory / "vocabulary.json")

        frame = pd.DataFrame(self.covariates, columns=list(self.covariate_names))
        frame.insert(0, "doc_id", list(self.doc_ids))
        frame.to_csv(
            directory / "covariates.csv",
            index=False,
            float_format="%.17g",
            lineterminator="\n",
        )

        (directory / "dropped.txt").write_text(
            "".join(f"{doc_id}\n" for doc_id in self.dropped), encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: Union[str, Path]) -> DocTermMatrix:
        """
        Read a matrix written by :meth:`.save`.

        :param directory: the directory
        :return: the matrix
        """
        directory = Path(directory)
        vocabulary = Vocabulary.load(directory / "vocabulary.json")
        frame = pd.read_csv(
            directory / "covariates.csv", dtype={"doc_id": str}, keep_default_na=False
        )
        doc_ids = tuple(frame.pop("doc_id"))

        triplets = np.loadtxt(
            directory / "counts.txt", dtype=np.int64, ndmin=2
        ).reshape(-1, 3)
        counts = sparse.csr_matrix(
            (triplets[:, 2], (triplets[:, 0], triplets[:, 1])),
            shape=(len(doc_ids), len(vocabulary)),
        )

        dropped_path = directory / "dropped.txt"
        dropped = (
            tuple(dropped_path.read_text(encoding="utf-8").split())
            if dropped_path.exists()
            else ()
        )

        return cls(
            counts=counts,
            doc_ids=doc_ids,
            vocabulary=vocabulary,
            covariates=frame.to_numpy(dtype=np.float64),
            covariate_names=tuple(frame.columns),
            dropped=dropped,
        )


def vectorize(
    layer: CorpusLayer,
    vocab: Vocabulary,
    covariate_spec: Optional[CovariateSpec] = None,
    *,
    tokenizer: Optional[TokenizerOptions] = None,
    periods: Optional[PeriodTable] = None,
    min_tokens: int = 10,
    tokens: Optional[Sequence[Sequence[str]]] = None,
    n_jobs: Optional[int] = None,
) -> DocTermMatrix:
    """
    Count the vocabulary terms of each document, and build the design matrix.

    Documents with fewer than ``min_tokens`` vocabulary tokens are dropped and
    listed in the result.
    Vocabulary terms not occurring in any retained document are removed.

    :param layer: the layer
    :param vocab: the vocabulary
    :param covariate_spec: the prevalence covariates; intercept only if not stated
    :param tokenizer: the tokenizer options the vocabulary was built with;
        defaults apply if not stated
    :param periods: the period table, required by the ``period`` covariate
    :param min_tokens: minimum number of vocabulary tokens of a retained document
    :param tokens: the tokens of each document, if already tokenized with the
        tokenizer options
    :param n_jobs: number of parallel jobs for tokenization (default: serial)
    :return: the document-term matrix
    :raise ConfigurationError: the tokenizer options do not match the vocabulary,
        or a period covariate is requested without a period table
    :raise DataError: a covariate field is missing on a retained document, or no
        document is retained
    """
    covariate_spec = covariate_spec or CovariateSpec()
    tokenizer = tokenizer or TokenizerOptions()

    if tokenizer.options_hash() != vocab.options_hash:
        raise ConfigurationError(
            "the tokenizer options differ from the options the vocabulary was "
            "built with"
        )
    if covariate_spec.uses_periods and periods is None:
        raise ConfigurationError("the period covariate requires a period table")

    if tokens is None:
        tokens = tokenize_layer(layer, tokenizer, n_jobs=n_jobs)

    vectorizer = CountVectorizer(
        analyzer=document_terms, vocabulary=vocab.terms, dtype=np.int64
    )
    all_counts: sparse.csr_matrix = vectorizer.fit_transform(tokens)

    lengths = np.asarray(all_counts.sum(axis=1)).ravel()
    keep = lengths >= min_tokens
    retained: List[Document] = [
        document for document, kept in zip(layer.documents, keep) if kept
    ]
    dropped: List[str] = [
        document.id for document, kept in zip(layer.documents, keep) if not kept
    ]

    if dropped:
        log.warning(
            f"dropped {len(dropped)} documents of the {layer.layer.value} layer "
            f"with fewer than {min_tokens} vocabulary tokens"
        )
    if not retained:
        raise DataError(
            f"no document of the {layer.layer.value} layer has at least "
            f"{min_tokens} vocabulary tokens"
        )

    counts = all_counts[np.flatnonzero(keep)]

    used = np.flatnonzero(np.asarray(counts.sum(axis=0)).ravel() > 0)
    if len(used) < len(vocab):
        log.info(
            f"removing {len(vocab) - len(used)} vocabulary terms not occurring in "
            "any retained document"
        )
        counts = counts[:, used]
        vocab = vocab.restrict(used.tolist())

    names, design = _design_matrix(retained, covariate_spec, periods)

    return DocTermMatrix(
        counts=counts,
        doc_ids=tuple(document.id for document in retained),
        vocabulary=vocab,
        covariates=design,
        covariate_names=names,
        dropped=tuple(dropped),
    )


__tracker.validate()


def _covariate_value(
    document: Document, name: str, periods: Optional[PeriodTable]
) -> Optional[str]:
    if name == COVARIATE_PROGRAMME:
        return None if document.programme is None else document.programme.value
    elif name == COVARIATE_PERIOD:
        assert periods is not None
        period = periods.period_of(document.year)
        return None if period is None else period.label
    elif name == COVARIATE_YEAR:
        return str(document.year)
    else:
        value = document.extra.get(name)
        return value if value else None


def _levels(name: str, values: Iterable[str], periods: Optional[PeriodTable]) -> List[str]:
    observed = set(values)
    if name == COVARIATE_PROGRAMME:
        order = [programme.value for programme in Programme]
    elif name == COVARIATE_PERIOD:
        assert periods is not None
        order = periods.labels
    else:
        order = sorted(observed)
    return [level for level in order if level in observed]


def _design_matrix(
    documents: Sequence[Document],
    spec: CovariateSpec,
    periods: Optional[PeriodTable],
) -> Tuple[Tuple[str, ...], np.ndarray]:
    names: List[str] = [INTERCEPT]
    columns: List[np.ndarray] = [np.ones(len(documents))]

    def _values(name: str) -> List[str]:
        values = []
        for document in documents:
            value = _covariate_value(document, name, periods)
            if value is None:
                raise DataError(
                    f"covariate {name!r} is missing on document {document.id!r}"
                )
            values.append(value)
        return values

    for name in spec.categorical:
        values = _values(name)
        levels = _levels(name, values, periods)
        for level in levels[1:]:
            names.append(f"{name}[{level}]")
            columns.append(np.array([value == level for value in values], dtype=float))

    for name in spec.numeric:
        try:
            numbers = np.array([float(value) for value in _values(name)])
        except ValueError as e:
            raise DataError(f"covariate {name!r} is not numeric: {e}") from e
        std = numbers.std()
        if not std > 0.0:
            raise DataError(
                f"covariate {name!r} is constant and cannot be standardized"
            )
        names.append(name)
        columns.append((numbers - numbers.mean()) / std)

    return tuple(names), np.column_stack(columns)

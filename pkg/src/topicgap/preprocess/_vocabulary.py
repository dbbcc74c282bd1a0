"""
Vocabularies of terms selected by document frequency.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.feature_extraction.text import CountVectorizer

from ..api import AllTracker, ConfigurationError, DataError
from ..corpus import CorpusLayer
from ._tokenize import TokenizerOptions, tokenize_layer

log = logging.getLogger(__name__)

__all__ = ["VocabularyOptions", "Vocabulary", "build_vocabulary", "document_terms"]

__tracker = AllTracker(globals())


@dataclass(frozen=True)
class VocabularyOptions:
    """
    Document-frequency thresholds for selecting vocabulary terms.
    """

    #: minimum number of documents a term must occur in
    min_df: int = 5
    #: maximum share of documents a term may occur in
    max_df_ratio: float = 0.5

    def __post_init__(self) -> None:
        if self.min_df < 1:
            raise ConfigurationError(f"arg min_df must be positive but is {self.min_df}")
        if not 0.0 < self.max_df_ratio <= 1.0:
            raise ConfigurationError(
                f"arg max_df_ratio must be in range (0, 1] but is {self.max_df_ratio}"
            )


@dataclass(frozen=True)
class Vocabulary:
    """
    A lexicographically sorted list of unique terms, with their document frequencies.
    """

    #: the terms, sorted
    terms: Tuple[str, ...]
    #: the number of documents containing each term
    doc_freq: Tuple[int, ...]
    #: hash of the tokenizer options the terms were produced with
    options_hash: str
    #: the minimum document frequency used to select the terms
    min_df: int = 1
    _index: Dict[str, int] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "doc_freq", tuple(self.doc_freq))
        if len(self.terms) != len(self.doc_freq):
            raise ValueError(
                f"arg doc_freq has length {len(self.doc_freq)} but must match the "
                f"number of terms ({len(self.terms)})"
            )
        if any(a >= b for a, b in zip(self.terms[:-1], self.terms[1:])):
            raise ValueError("arg terms must be unique and sorted")
        if any(df < self.min_df for df in self.doc_freq):
            raise ValueError(f"all document frequencies must be at least {self.min_df}")
        self._index.update((term, i) for i, term in enumerate(self.terms))

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self._index

    def index(self, term: str) -> int:
        """
        Get the index of a term.

        :param term: the term
        :return: the 0-based index of the term
        :raise KeyError: the term is not in this vocabulary
        """
        return self._index[term]

    def get_index(self, term: str) -> Optional[int]:
        """
        Get the index of a term, or ``None`` if the term is not in this vocabulary.
        """
        return self._index.get(term)

    def restrict(self, indices: Sequence[int]) -> Vocabulary:
        """
        Create a vocabulary with a subset of the terms of this vocabulary.

        :param indices: ascending indices of the terms to keep
        :return: the new vocabulary
        """
        return Vocabulary(
            terms=tuple(self.terms[i] for i in indices),
            doc_freq=tuple(self.doc_freq[i] for i in indices),
            options_hash=self.options_hash,
            min_df=self.min_df,
        )

    def save(self, path: Union[str, Path]) -> None:
        """
        Write this vocabulary to a JSON file.

        :param path: the path of the file
        """
        Path(path).write_text(
            json.dumps(
                {
                    "options_hash": self.options_hash,
                    "min_df": self.min_df,
                    "terms": list(self.terms),
                    "doc_freq": list(self.doc_freq),
                },
                indent=1,
                ensure_ascii=False,
            )
            + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> Vocabulary:
        """
        Read a vocabulary written by :meth:`.save`.

        :param path: the path of the file
        :return: the vocabulary
        """
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            terms=tuple(data["terms"]),
            doc_freq=tuple(data["doc_freq"]),
            options_hash=data["options_hash"],
            min_df=data["min_df"],
        )


def build_vocabulary(
    layer: CorpusLayer,
    options: Optional[VocabularyOptions] = None,
    *,
    tokenizer: Optional[TokenizerOptions] = None,
    tokens: Optional[Iterable[Sequence[str]]] = None,
    n_jobs: Optional[int] = None,
) -> Vocabulary:
    """
    Select the terms of a layer occurring in at least ``min_df`` and at most
    ``max_df_ratio`` × D documents.

    :param layer: the layer
    :param options: the document-frequency thresholds; defaults apply if not stated
    :param tokenizer: the tokenizer options; defaults apply if not stated
    :param tokens: the tokens of each document, if already tokenized with the
        tokenizer options
    :param n_jobs: number of parallel jobs for tokenization (default: serial)
    :return: the vocabulary
    :raise DataError: the layer has no documents
    :raise ConfigurationError: no term meets the thresholds
    """
    options = options or VocabularyOptions()
    tokenizer = tokenizer or TokenizerOptions()

    if len(layer) == 0:
        raise DataError("cannot build a vocabulary from an empty layer")

    if tokens is None:
        tokens = tokenize_layer(layer, tokenizer, n_jobs=n_jobs)

    max_df = options.max_df_ratio * len(layer)
    vectorizer = CountVectorizer(
        analyzer=document_terms,
        min_df=options.min_df,
        # a float is a share of the documents, an int a document count
        max_df=float(options.max_df_ratio),
        dtype=np.int64,
    )
    try:
        counts = vectorizer.fit_transform(tokens)
    except ValueError as e:
        # raised if no term remains after pruning
        raise ConfigurationError(
            f"no term of the {layer.layer.value} layer occurs in at least "
            f"{options.min_df} and at most {max_df:g} documents; "
            "relax the vocabulary thresholds"
        ) from e

    terms = vectorizer.get_feature_names_out().tolist()
    doc_freq = np.bincount(counts.indices, minlength=len(terms))

    log.info(f"vocabulary of the {layer.layer.value} layer: {len(terms)} terms")

    return Vocabulary(
        terms=tuple(terms),
        doc_freq=tuple(int(df) for df in doc_freq),
        options_hash=tokenizer.options_hash(),
        min_df=options.min_df,
    )


def document_terms(tokens: Sequence[str]) -> Sequence[str]:
    """
    Analyzer for :class:`~sklearn.feature_extraction.text.CountVectorizer`
    accepting documents that are already tokenized.

    :param tokens: the tokens of a document
    :return: the tokens, unchanged
    """
    return tokens


__tracker.validate()

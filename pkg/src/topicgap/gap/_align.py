"""
Alignment of the vocabularies of two layers.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..api import AllTracker, ConfigurationError
from ..preprocess import Vocabulary

log = logging.getLogger(__name__)

__all__ = ["UnionVocab", "align_vocabularies"]

__tracker = AllTracker(globals())


@dataclass(frozen=True, eq=False)
class UnionVocab:
    """
    The sorted union of the terms of two vocabularies, with the position of each
    vocabulary's terms in the union.
    """

    #: the terms of both vocabularies, sorted
    terms: Tuple[str, ...]
    #: the union index of each term of the first vocabulary
    remap_a: np.ndarray
    #: the union index of each term of the second vocabulary
    remap_b: np.ndarray
    #: hash of the tokenizer options shared by both vocabularies
    options_hash: str

    def __len__(self) -> int:
        return len(self.terms)

    def embed_a(self, beta: np.ndarray) -> np.ndarray:
        """
        Embed topic-word distributions over the first vocabulary in the union.

        :param beta: the K × V_A topic-word probabilities
        :return: the K × U probabilities, zero for terms missing in the first
            vocabulary
        """
        return _embed(beta, self.remap_a, len(self.terms))

    def embed_b(self, beta: np.ndarray) -> np.ndarray:
        """
        Embed topic-word distributions over the second vocabulary in the union.

        :param beta: the K × V_B topic-word probabilities
        :return: the K × U probabilities, zero for terms missing in the second
            vocabulary
        """
        return _embed(beta, self.remap_b, len(self.terms))


def align_vocabularies(vocab_a: Vocabulary, vocab_b: Vocabulary) -> UnionVocab:
    """
    Merge two vocabularies built with the same tokenizer options.

    :param vocab_a: the first vocabulary
    :param vocab_b: the second vocabulary
    :return: the union vocabulary
    :raise ConfigurationError: the vocabularies were built with different tokenizer
        options
    """
    if vocab_a.options_hash != vocab_b.options_hash:
        raise ConfigurationError(
            "cannot compare vocabularies built with different tokenizer options "
            f"({vocab_a.options_hash[:12]} vs {vocab_b.options_hash[:12]})"
        )

    terms = tuple(sorted(set(vocab_a.terms) | set(vocab_b.terms)))
    index = {term: i for i, term in enumerate(terms)}
    log.debug(
        f"union vocabulary of {len(terms)} terms, "
        f"{len(vocab_a) + len(vocab_b) - len(terms)} shared"
    )
    return UnionVocab(
        terms=terms,
        remap_a=np.array([index[term] for term in vocab_a.terms], dtype=np.intp),
        remap_b=np.array([index[term] for term in vocab_b.terms], dtype=np.intp),
        options_hash=vocab_a.options_hash,
    )


__tracker.validate()


def _embed(beta: np.ndarray, remap: np.ndarray, n_terms: int) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape[1] != len(remap):
        raise ValueError(
            f"arg beta has {beta.shape[1]} columns but the vocabulary has "
            f"{len(remap)} terms"
        )
    embedded = np.zeros((beta.shape[0], n_terms))
    embedded[:, remap] = beta
    return embedded

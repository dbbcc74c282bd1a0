"""
Diagnostics for judging topic quality and choosing the number of topics.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.stats import rankdata

from ..api import AllTracker, ConfigurationError, TopicGapError
from ..preprocess import DocTermMatrix, Vocabulary
from ._estep import estep_document, theta_from_eta
from ._fit import fit
from ._model import StmModel
from ._options import FitOptions, SigmaMode

log = logging.getLogger(__name__)

__all__ = [
    "HeldoutScore",
    "Diagnostics",
    "topic_top_words",
    "semantic_coherence",
    "exclusivity",
    "heldout_likelihood",
    "residual_dispersion",
    "select_k",
]

#: Share of documents held out by :func:`.select_k`.
HELDOUT_RATIO = 0.1

#: Columns of the diagnostics table.
DIAGNOSTICS_COLUMNS = [
    "heldout_loglik",
    "semantic_coherence",
    "exclusivity",
    "residual_dispersion",
    "converged",
    "error",
]

__tracker = AllTracker(globals())


@dataclass(frozen=True)
class HeldoutScore:
    """
    The document-completion likelihood of held-out documents.
    """

    #: mean log-likelihood per evaluated token
    loglik: float
    #: number of documents evaluated
    n_documents: int
    #: number of evaluated tokens
    n_tokens: int
    #: number of documents skipped for having fewer than 2 tokens
    n_skipped: int


@dataclass(frozen=True, eq=False)
class Diagnostics:
    """
    Fit diagnostics for a grid of topic counts.
    """

    #: one row per number of topics, indexed by ``k``, with columns
    #: ``heldout_loglik``, ``semantic_coherence``, ``exclusivity``,
    #: ``residual_dispersion``, ``converged`` and ``error``
    table: pd.DataFrame

    def to_csv(self, path: Union[str, Path]) -> None:
        """
        Write the diagnostics table, with 6 significant digits.

        :param path: the path of the CSV file
        """
        self.table.to_csv(path, float_format="%.6g", lineterminator="\n")


def topic_top_words(
    beta: np.ndarray, terms: Union[Vocabulary, Sequence[str]], m: int = 10
) -> List[List[str]]:
    """
    List the most probable terms of each topic.

    Ties are broken lexicographically.

    :param beta: the K × V topic-word probabilities
    :param terms: the vocabulary, or its terms
    :param m: the number of terms per topic
    :return: the top ``m`` terms of each topic, most probable first
    """
    terms = list(terms.terms if isinstance(terms, Vocabulary) else terms)
    if not 1 <= m <= len(terms):
        raise ConfigurationError(f"arg m must be in range [1, {len(terms)}] but is {m}")
    term_array = np.array(terms)
    return [term_array[np.lexsort((term_array, -row))[:m]].tolist() for row in beta]


def semantic_coherence(beta: np.ndarray, dtm: DocTermMatrix, m: int = 10) -> np.ndarray:
    """
    Score how often the top terms of each topic occur in the same documents.

    For the top ``m`` terms of a topic, ordered by probability, the score is the
    sum over all pairs ``i < j`` of ``log((D(i, j) + 1) / D(j))``, where ``D(j)``
    counts the documents containing term ``j`` and ``D(i, j)`` the documents
    containing both terms.

    :param beta: the K × V topic-word probabilities
    :param dtm: the documents to count co-occurrences in
    :param m: the number of top terms
    :return: the score of each topic
    """
    top = _top_indices(beta, m)
    occurs = sparse.csc_matrix(dtm.counts > 0, dtype=np.float64)
    scores = np.zeros(len(beta))
    for k, indices in enumerate(top):
        columns = occurs[:, indices]
        co_occurrence = (columns.T @ columns).toarray()
        doc_freq = np.maximum(np.diag(co_occurrence), 1.0)
        i, j = np.triu_indices(m, k=1)
        scores[k] = np.sum(np.log((co_occurrence[i, j] + 1.0) / doc_freq[j]))
    return scores


def exclusivity(beta: np.ndarray, m: int = 10, omega: float = 0.7) -> np.ndarray:
    """
    Score how exclusive the top terms of each topic are to that topic.

    The exclusivity of a term to a topic is its probability in the topic divided by
    the sum of its probabilities in all topics.
    A term's score combines the empirical CDFs, within the topic, of its
    probability and its exclusivity by a weighted harmonic mean, with weight
    ``omega`` on the probability; the topic score is the mean term score over the
    top ``m`` terms.

    :param beta: the K × V topic-word probabilities
    :param m: the number of top terms
    :param omega: the weight of the probability in the harmonic mean
    :return: the score of each topic
    """
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"arg omega must be in range [0, 1] but is {omega}")
    n_terms = beta.shape[1]
    top = _top_indices(beta, m)
    exclusive = beta / beta.sum(axis=0, keepdims=True)
    scores = np.zeros(len(beta))
    for k, indices in enumerate(top):
        ecdf_beta = rankdata(beta[k], method="max")[indices] / n_terms
        ecdf_exclusive = rankdata(exclusive[k], method="max")[indices] / n_terms
        scores[k] = np.mean(1.0 / (omega / ecdf_beta + (1.0 - omega) / ecdf_exclusive))
    return scores


def heldout_likelihood(
    model: StmModel, heldout: DocTermMatrix, seed: int
) -> HeldoutScore:
    """
    Estimate how well a model predicts unseen text by document completion.

    The tokens of each held-out document are split in random halves; the topic
    proportions are inferred from the first half, and the log-likelihood of each
    token of the second half is evaluated under the inferred proportions.
    Documents with fewer than 2 tokens are skipped.

    :param model: the model
    :param heldout: the held-out documents, over the vocabulary of the model
    :param seed: seed of the random generator splitting the tokens
    :return: the mean log-likelihood per evaluated token
    """
    if heldout.vocabulary.terms != model.vocabulary.terms:
        raise ConfigurationError(
            "the held-out documents must use the vocabulary of the model"
        )

    rng = np.random.default_rng(seed)
    total = 0.0
    n_tokens = 0
    n_documents = 0
    n_skipped = 0
    for d in range(heldout.n_documents):
        indices, counts = heldout.row(d)
        tokens = np.repeat(indices, counts.astype(np.int64))
        if len(tokens) < 2:
            n_skipped += 1
            continue
        tokens = tokens[rng.permutation(len(tokens))]
        observed, evaluated = tokens[: len(tokens) // 2], tokens[len(tokens) // 2 :]

        observed_terms, observed_counts = np.unique(observed, return_counts=True)
        posterior = estep_document(
            (observed_terms, observed_counts.astype(np.float64)),
            heldout.covariates[d],
            model.gamma,
            model.sigma,
            model.beta,
            sigma_mode=SigmaMode.Point,
            newton_max_iters=model.options.newton_max_iters,
        )
        mixture = theta_from_eta(posterior.eta) @ model.beta[:, evaluated]
        total += float(np.sum(np.log(mixture)))
        n_tokens += len(evaluated)
        n_documents += 1

    if n_skipped:
        log.warning(f"skipped {n_skipped} held-out documents with fewer than 2 tokens")

    return HeldoutScore(
        loglik=total / n_tokens if n_tokens else float("nan"),
        n_documents=n_documents,
        n_tokens=n_tokens,
        n_skipped=n_skipped,
    )


def residual_dispersion(model: StmModel, dtm: DocTermMatrix) -> float:
    """
    Estimate the dispersion of the multinomial residuals of a fitted model.

    With ``q = theta beta`` the fitted term probabilities of a document of length
    ``N``, this is the sum of ``(c - N q)² / (N q (1 - q))`` over all documents and
    terms, divided by ``D (V - K)``; values well above 1 suggest too few topics.

    :param model: the fitted model
    :param dtm: the document-term matrix the model was fitted to
    :return: the dispersion
    """
    if dtm.n_documents != len(model.eta):
        raise ConfigurationError(
            "arg dtm must be the document-term matrix the model was fitted to"
        )
    degrees = dtm.n_documents * (model.n_terms - model.n_topics)
    if degrees <= 0:
        raise ConfigurationError(
            "residual dispersion requires more terms than topics"
        )

    q = model.theta @ model.beta
    lengths = dtm.doc_lengths.astype(np.float64)[:, np.newaxis]
    expected = lengths * q
    counts = dtm.counts.toarray().astype(np.float64)
    statistic = np.sum((counts - expected) ** 2 / (expected * (1.0 - q)))
    return float(statistic / degrees)


def select_k(
    dtm: DocTermMatrix,
    k_grid: Iterable[int],
    options: Optional[FitOptions] = None,
    seed: int = 0,
    *,
    m: int = 10,
    n_jobs: Optional[int] = None,
) -> Diagnostics:
    """
    Fit a model for each number of topics in a grid, and compute its diagnostics.

    A random 10% of the documents is held out for the held-out likelihood; the
    other diagnostics are computed on the remaining training documents.
    A fit failing for one number of topics is reported in the ``error`` column, and
    the grid continues.

    :param dtm: the document-term matrix
    :param k_grid: at least 2 distinct numbers of topics
    :param options: the fit options; defaults apply if not stated
    :param seed: seed of the random generators of the split and the fits
    :param m: the number of top terms for coherence and exclusivity
    :param n_jobs: number of parallel E-step jobs (default: serial)
    :return: the diagnostics
    """
    grid = sorted(set(k_grid))
    if len(grid) < 2:
        raise ConfigurationError(
            f"arg k_grid must contain at least 2 distinct values but is {grid}"
        )
    if dtm.n_documents < 2:
        raise ConfigurationError("at least 2 documents are required to hold out data")

    rng = np.random.default_rng(seed)
    permutation = rng.permutation(dtm.n_documents)
    n_heldout = max(1, int(round(HELDOUT_RATIO * dtm.n_documents)))
    heldout = dtm.subset(np.sort(permutation[:n_heldout]).tolist())
    train = dtm.subset(np.sort(permutation[n_heldout:]).tolist())
    heldout_seed = int(rng.integers(2**32))

    rows = []
    for k in grid:
        log.info(f"diagnosing {k} topics")
        try:
            model = fit(train, k, options, seed, n_jobs=n_jobs)
            m_k = min(m, model.n_terms)
            rows.append(
                (
                    k,
                    heldout_likelihood(model, heldout, heldout_seed).loglik,
                    float(np.mean(semantic_coherence(model.beta, train, m_k))),
                    float(np.mean(exclusivity(model.beta, m_k))),
                    residual_dispersion(model, train),
                    model.converged,
                    "",
                )
            )
        except TopicGapError as e:
            log.warning(f"fit with {k} topics failed: {e}")
            rows.append((k, np.nan, np.nan, np.nan, np.nan, False, str(e)))

    table = pd.DataFrame(rows, columns=["k", *DIAGNOSTICS_COLUMNS]).set_index("k")
    return Diagnostics(table)


__tracker.validate()


def _top_indices(beta: np.ndarray, m: int) -> np.ndarray:
    # indices of the top m terms of each topic; ties by lowest index, which is
    # lexicographic order for sorted vocabularies
    n_terms = beta.shape[1]
    if not 1 <= m <= n_terms:
        raise ConfigurationError(f"arg m must be in range [1, {n_terms}] but is {m}")
    positions = np.arange(n_terms)
    return np.array([np.lexsort((positions, -row))[:m] for row in beta])

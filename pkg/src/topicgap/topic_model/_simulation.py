"""
Simulation of corpora with planted topics.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from ..api import AllTracker, ConfigurationError
from ..preprocess import DocTermMatrix, Vocabulary
from ._estep import theta_from_eta

log = logging.getLogger(__name__)

__all__ = ["SimulatedCorpus", "simulate_corpus"]

#: Options hash of the vocabularies of simulated corpora.
SIMULATED_OPTIONS_HASH = "simulated"

__tracker = AllTracker(globals())


@dataclass(frozen=True, eq=False)
class SimulatedCorpus:
    """
    A simulated document-term matrix with the parameters it was drawn from.
    """

    #: the simulated documents
    dtm: DocTermMatrix
    #: the planted K × V topic-word probabilities
    beta: np.ndarray
    #: the planted P × (K-1) prevalence coefficients
    gamma: np.ndarray
    #: the drawn D × (K-1) document modes
    eta: np.ndarray
    #: the D × K topic proportions of the drawn modes
    theta: np.ndarray


def simulate_corpus(
    n_documents: int = 500,
    n_terms: int = 500,
    n_topics: int = 3,
    doc_length: int = 100,
    *,
    covariate_effect: Optional[float] = None,
    effect_topic: int = 0,
    sigma_scale: float = 1.0,
    topic_concentration: float = 5.0,
    seed: int = 0,
) -> SimulatedCorpus:
    """
    Draw a corpus from a topic model with well-separated planted topics.

    The vocabulary is split into ``n_topics`` contiguous blocks of equal size, and
    each topic draws its word probabilities over one block from a symmetric
    Dirichlet distribution with the given concentration.
    Document modes are drawn from a normal distribution with standard deviation
    ``sigma_scale`` around the covariate-dependent prior mean.

    If a covariate effect is given, every second document belongs to a group whose
    log-odds of topic ``effect_topic`` against the reference topic (the last one)
    are shifted by the effect; the design matrix then has columns ``(intercept)``
    and ``group``.
    Otherwise, the design matrix only has the intercept.

    :param n_documents: the number of documents D
    :param n_terms: the number of terms V
    :param n_topics: the number of topics K
    :param doc_length: the number of tokens of each document
    :param covariate_effect: the shift of the log-odds of topic ``effect_topic``
        in the group
    :param effect_topic: the index of the topic affected by the covariate; must not
        be the last topic
    :param sigma_scale: the standard deviation of the document modes
    :param topic_concentration: the Dirichlet concentration of the topic words
    :param seed: seed of the random generator
    :return: the simulated corpus
    """
    if n_topics < 2:
        raise ConfigurationError(f"arg n_topics must be at least 2 but is {n_topics}")
    if n_terms < n_topics:
        raise ConfigurationError(
            f"arg n_terms must be at least n_topics ({n_topics}) but is {n_terms}"
        )
    if not 0 <= effect_topic < n_topics - 1:
        raise ConfigurationError(
            f"arg effect_topic must be in range [0, {n_topics - 2}] "
            f"but is {effect_topic}"
        )

    rng = np.random.default_rng(seed)

    bounds = np.linspace(0, n_terms, n_topics + 1).round().astype(int)
    beta = np.zeros((n_topics, n_terms))
    for k, (start, end) in enumerate(zip(bounds[:-1], bounds[1:])):
        beta[k, start:end] = rng.dirichlet(np.full(end - start, topic_concentration))

    intercept = np.ones(n_documents)
    if covariate_effect is None:
        covariates = intercept[:, np.newaxis]
        covariate_names = ("(intercept)",)
    else:
        group = (np.arange(n_documents) % 2).astype(float)
        covariates = np.column_stack([intercept, group])
        covariate_names = ("(intercept)", "group")

    gamma = np.zeros((covariates.shape[1], n_topics - 1))
    if covariate_effect is not None:
        gamma[1, effect_topic] = covariate_effect

    eta = covariates @ gamma + sigma_scale * rng.standard_normal(
        (n_documents, n_topics - 1)
    )
    theta = theta_from_eta(eta)

    counts = np.zeros((n_documents, n_terms), dtype=np.int64)
    for d in range(n_documents):
        topic_counts = rng.multinomial(doc_length, theta[d])
        for k in range(n_topics):
            if topic_counts[k]:
                counts[d] += rng.multinomial(topic_counts[k], beta[k])

    doc_freq = (counts > 0).sum(axis=0)
    vocabulary = Vocabulary(
        terms=tuple(f"w{v:05d}" for v in range(n_terms)),
        doc_freq=tuple(int(df) for df in doc_freq),
        options_hash=SIMULATED_OPTIONS_HASH,
        min_df=0,
    )

    dtm = DocTermMatrix(
        counts=sparse.csr_matrix(counts),
        doc_ids=tuple(f"S{d + 1:06d}" for d in range(n_documents)),
        vocabulary=vocabulary,
        covariates=covariates,
        covariate_names=covariate_names,
    )

    return SimulatedCorpus(dtm=dtm, beta=beta, gamma=gamma, eta=eta, theta=theta)


__tracker.validate()

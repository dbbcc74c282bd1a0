"""
Initialization of the topic model.
"""
import logging
from typing import List

import numpy as np

from ..api import AllTracker, ConfigurationError
from ..preprocess import DocTermMatrix
from ._model import StmModel
from ._options import FitOptions, InitMode

log = logging.getLogger(__name__)

__all__ = ["init_model", "gibbs_lda"]

#: Concentration of the Dirichlet distribution of random topics.
DIRICHLET_CONCENTRATION = 0.1

#: Standard deviation of the random initial document modes.
RANDOM_ETA_SCALE = 0.1

#: Variance of the diffuse initial topic covariance of random topics.
RANDOM_SIGMA_SCALE = 20.0

#: Topic-word smoothing of the Gibbs sampler.
LDA_DELTA = 0.01

#: Topic-word probabilities are floored at this value after initialization.
_FLOOR = 1e-9

__tracker = AllTracker(globals())


def init_model(
    dtm: DocTermMatrix,
    k: int,
    seed: int,
    init: InitMode = InitMode.SeededLda,
    *,
    options: FitOptions = FitOptions(),
) -> StmModel:
    """
    Create an untrained model with initial topic-word distributions.

    With LDA topics, document modes and prevalence coefficients are zero and the
    topic covariance is the identity, so all documents start with uniform topic
    proportions.
    Random topics carry no information about the documents yet: their document
    modes start from small random noise, and their topic covariance is diffuse so
    that the first E-step is driven by the data rather than by the prior.

    :param dtm: the document-term matrix
    :param k: the number of topics
    :param seed: seed of the random generator
    :param init: the initialization of the topic-word distributions
    :param options: the fit options, recorded in the model
    :return: the model
    :raise ConfigurationError: fewer than 2 topics, or more topics than documents
    """
    if k < 2:
        raise ConfigurationError(f"arg k must be at least 2 but is {k}")
    if k > dtm.n_documents:
        raise ConfigurationError(
            f"arg k must not exceed the number of documents ({dtm.n_documents}) "
            f"but is {k}"
        )

    rng = np.random.default_rng(seed)
    eta = np.zeros((dtm.n_documents, k - 1))
    sigma = np.eye(k - 1)
    if init is InitMode.RandomDirichlet:
        beta = rng.dirichlet(np.full(dtm.n_terms, DIRICHLET_CONCENTRATION), size=k)
        eta = rng.normal(scale=RANDOM_ETA_SCALE, size=eta.shape)
        sigma *= RANDOM_SIGMA_SCALE
    elif init is InitMode.SeededLda:
        beta = gibbs_lda(dtm, k, rng, sweeps=options.lda_sweeps)
    else:
        raise ConfigurationError(f"unknown initialization: {init}")

    beta = np.maximum(beta, _FLOOR)
    beta /= beta.sum(axis=1, keepdims=True)

    return StmModel(
        beta=beta,
        gamma=np.zeros((dtm.n_covariates, k - 1)),
        sigma=sigma,
        eta=eta,
        vocabulary=dtm.vocabulary,
        covariate_names=dtm.covariate_names,
        doc_ids=dtm.doc_ids,
        seed=seed,
        options=options,
    )


def gibbs_lda(
    dtm: DocTermMatrix,
    k: int,
    rng: np.random.Generator,
    *,
    sweeps: int = 20,
) -> np.ndarray:
    """
    Estimate topic-word distributions with a collapsed Gibbs sampler for LDA, using
    document-topic smoothing 50/K and topic-word smoothing 0.01.

    :param dtm: the document-term matrix
    :param k: the number of topics
    :param rng: the random generator
    :param sweeps: the number of sweeps over all tokens
    :return: the K × V topic-word probabilities estimated from the final counts
    """
    alpha = 50.0 / k
    delta = LDA_DELTA
    n_terms = dtm.n_terms
    v_delta = n_terms * delta

    counts = dtm.counts
    docs: List[int] = np.repeat(
        np.repeat(np.arange(dtm.n_documents), np.diff(counts.indptr)), counts.data
    ).tolist()
    words: List[int] = np.repeat(counts.indices, counts.data).tolist()
    n_tokens = len(words)

    topics: List[int] = rng.integers(k, size=n_tokens).tolist()
    doc_topic = [[0] * k for _ in range(dtm.n_documents)]
    topic_word = [[0] * n_terms for _ in range(k)]
    topic_total = [0] * k
    for d, w, z in zip(docs, words, topics):
        doc_topic[d][z] += 1
        topic_word[z][w] += 1
        topic_total[z] += 1

    topic_range = range(k)
    for sweep in range(sweeps):
        uniforms: List[float] = rng.random(n_tokens).tolist()
        for i in range(n_tokens):
            d, w, z = docs[i], words[i], topics[i]
            dt = doc_topic[d]
            dt[z] -= 1
            topic_word[z][w] -= 1
            topic_total[z] -= 1

            cumulative = []
            total = 0.0
            for j in topic_range:
                total += (dt[j] + alpha) * (topic_word[j][w] + delta) / (
                    topic_total[j] + v_delta
                )
                cumulative.append(total)

            u = uniforms[i] * total
            z = 0
            while z < k - 1 and cumulative[z] <= u:
                z += 1

            topics[i] = z
            dt[z] += 1
            topic_word[z][w] += 1
            topic_total[z] += 1

        log.debug(f"LDA initialization: sweep {sweep + 1} of {sweeps}")

    beta = np.array(topic_word, dtype=np.float64) + delta
    return beta / beta.sum(axis=1, keepdims=True)


__tracker.validate()

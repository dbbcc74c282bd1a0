"""
Variational EM fit of the topic model.
"""
from __future__ import annotations

import logging
from typing import Any, List, Optional

import numpy as np
from scipy import linalg

from ..api import AllTracker, ConfigurationError
from ..fit import FittableMixin, fitted_only
from ..parallelization import Job, JobRunner, ParallelizableMixin, chunk_ranges
from ..preprocess import DocTermMatrix
from ._estep import DocumentPosterior, estep_document, theta_from_eta
from ._init import init_model
from ._model import StmModel
from ._mstep import mstep, objective
from ._options import FitOptions, SigmaMode

log = logging.getLogger(__name__)

__all__ = ["fit", "run_estep", "StmEstimator"]

#: Relative slack of the objective's monotonicity check.
MONOTONICITY_SLACK = 1e-6

#: The topic covariance has collapsed if all its eigenvalues are within this factor
#: of the eigenvalue floor.
COLLAPSE_FACTOR = 10.0

__tracker = AllTracker(globals())


def fit(
    dtm: DocTermMatrix,
    k: int,
    options: Optional[FitOptions] = None,
    seed: int = 0,
    *,
    n_jobs: Optional[int] = None,
) -> StmModel:
    """
    Fit a topic model with ``k`` topics.

    Alternates the E-step over all documents and the M-step until the relative
    change of the objective falls below the tolerance, or the iteration limit is
    reached.
    If an iteration decreases the objective by more than a relative 1e-6, the fit
    stops and keeps the parameters of the previous iteration, so that the
    recorded objective trace never decreases.
    The fit is a pure function of the matrix, the options and the seed; in
    particular, it does not depend on ``n_jobs``.

    :param dtm: the document-term matrix
    :param k: the number of topics
    :param options: the fit options; defaults apply if not stated
    :param seed: seed of the random generator of the initialization
    :param n_jobs: number of parallel E-step jobs (default: serial)
    :return: the fitted model; check attribute ``converged``
    """
    options = options or FitOptions()
    model = init_model(dtm, k, seed, options.init, options=options)

    beta, gamma, sigma = model.beta, model.gamma, model.sigma
    eta = model.eta
    previous_parameters = beta, gamma, sigma
    change = np.inf
    trace: List[float] = []
    converged = False
    posteriors: List[DocumentPosterior] = []

    log.info(
        f"fitting {k} topics to {dtm.n_documents} documents over {dtm.n_terms} terms"
    )

    for iteration in range(1, options.max_em_iters + 1):
        candidates = run_estep(
            dtm,
            beta,
            gamma,
            sigma,
            eta_start=eta,
            sigma_mode=options.sigma_mode,
            newton_max_iters=options.newton_max_iters,
            n_jobs=n_jobs,
        )
        value = objective(candidates, gamma, sigma, options.ridge)

        if trace:
            previous = trace[-1]
            change = (value - previous) / abs(previous)
            if change < -MONOTONICITY_SLACK:
                # keep the parameters and posteriors of the previous iteration
                beta, gamma, sigma = previous_parameters
                converged = -change < options.tolerance
                log.warning(
                    f"EM objective decreased in iteration {iteration} from "
                    f"{previous:.10g} to {value:.10g}; stopping at iteration "
                    f"{iteration - 1}"
                )
                break

        posteriors = candidates
        eta = np.vstack([posterior.eta for posterior in posteriors])
        trace.append(value)
        n_flagged = sum(posterior.flagged for posterior in posteriors)
        log.debug(
            f"EM iteration {iteration}: objective {value:.10g}, "
            f"{n_flagged} flagged documents"
        )

        if len(trace) > 1 and abs(change) < options.tolerance:
            converged = True
            break

        previous_parameters = beta, gamma, sigma
        beta, gamma, sigma = mstep(dtm, posteriors, sigma, options)
        if np.max(linalg.eigvalsh(sigma)) <= options.sigma_floor * COLLAPSE_FACTOR:
            log.warning(
                f"topic covariance collapsed to its floor {options.sigma_floor:g} "
                f"in iteration {iteration}: all documents share the same topic "
                f"proportions; consider sigma_mode Laplace or a larger sigma_floor"
            )

    if converged:
        log.info(f"EM converged after {len(trace)} iterations")
    elif len(trace) == options.max_em_iters:
        log.warning(
            f"EM did not converge within {options.max_em_iters} iterations; "
            f"last relative change "
            f"{abs(trace[-1] - trace[-2]) / abs(trace[-2]) if len(trace) > 1 else np.nan:.3g}"
        )

    flagged = tuple(d for d, posterior in enumerate(posteriors) if posterior.flagged)
    if flagged:
        log.warning(f"{len(flagged)} documents were flagged in the last E-step")

    return StmModel(
        beta=beta,
        gamma=gamma,
        sigma=sigma,
        eta=eta,
        vocabulary=dtm.vocabulary,
        covariate_names=dtm.covariate_names,
        doc_ids=dtm.doc_ids,
        elbo_trace=tuple(trace),
        seed=seed,
        options=options,
        converged=converged,
        flagged=flagged,
    )


def run_estep(
    dtm: DocTermMatrix,
    beta: np.ndarray,
    gamma: np.ndarray,
    sigma: np.ndarray,
    *,
    eta_start: Optional[np.ndarray] = None,
    sigma_mode: SigmaMode = SigmaMode.Laplace,
    newton_max_iters: int = 50,
    n_jobs: Optional[int] = None,
) -> List[DocumentPosterior]:
    """
    Run the E-step for all documents of a matrix.

    Documents are processed in contiguous chunks, one job per chunk, in parallel
    threads if ``n_jobs`` is greater than 1; the result does not depend on
    ``n_jobs``.

    :param dtm: the document-term matrix
    :param beta: the topic-word probabilities
    :param gamma: the prevalence coefficients
    :param sigma: the topic covariance
    :param eta_start: the starting points of the mode search, one row per document;
        the prior means if not stated
    :param sigma_mode: whether to compute the Laplace approximations
    :param newton_max_iters: the maximum number of Newton iterations per document
    :param n_jobs: number of parallel jobs (default: serial)
    :return: the posteriors, in document order
    """
    sigma_inv = linalg.cho_solve(
        linalg.cho_factor(sigma, lower=True), np.eye(len(sigma))
    )
    sigma_inv = (sigma_inv + sigma_inv.T) / 2
    covariates = dtm.covariates

    @Job.delayed
    def _estep_chunk(chunk: range) -> List[DocumentPosterior]:
        return [
            estep_document(
                dtm.row(d),
                covariates[d],
                gamma,
                sigma,
                beta,
                eta_start=None if eta_start is None else eta_start[d],
                sigma_mode=sigma_mode,
                newton_max_iters=newton_max_iters,
                sigma_inv=sigma_inv,
            )
            for d in chunk
        ]

    runner = JobRunner(n_jobs=n_jobs or 1, shared_memory=True)
    chunks = runner.run_jobs(
        _estep_chunk(chunk)
        for chunk in chunk_ranges(dtm.n_documents, max(n_jobs or 1, 1))
    )
    return [posterior for chunk in chunks for posterior in chunk]


class StmEstimator(FittableMixin[DocTermMatrix], ParallelizableMixin):
    """
    Fits a topic model to a document-term matrix, and infers topic proportions of
    new documents.

    The E-step runs in parallel threads if ``n_jobs`` is greater than 1.
    """

    #: the number of topics
    n_topics: int

    #: the fit options
    options: FitOptions

    #: seed of the random generator of the initialization
    seed: int

    def __init__(
        self,
        n_topics: int,
        options: Optional[FitOptions] = None,
        seed: int = 0,
        *,
        n_jobs: Optional[int] = None,
        verbose: Optional[int] = None,
    ) -> None:
        """
        :param n_topics: the number of topics
        :param options: the fit options; defaults apply if not stated
        :param seed: seed of the random generator of the initialization
        :param n_jobs: number of threads of the E-step; serial if ``None``
            (default: ``None``)
        :param verbose: verbosity level of the parallel E-step;
            if ``None``, use joblib default (default: ``None``)
        """
        super().__init__(n_jobs=n_jobs, shared_memory=True, verbose=verbose)
        self.n_topics = n_topics
        self.options = options or FitOptions()
        self.seed = seed
        self._model: Optional[StmModel] = None

    def fit(self, __x: DocTermMatrix, **fit_params: Any) -> StmEstimator:
        """
        Fit a topic model to a document-term matrix.

        :param __x: the document-term matrix
        :return: ``self``
        """
        self._model = fit(
            __x, self.n_topics, self.options, self.seed, n_jobs=self.n_jobs
        )
        return self

    @property
    def is_fitted(self) -> bool:
        """[see superclass]"""
        return self._model is not None

    @property
    @fitted_only
    def model(self) -> StmModel:
        """
        The fitted model.
        """
        assert self._model is not None
        return self._model

    @fitted_only
    def transform(self, dtm: DocTermMatrix) -> np.ndarray:
        """
        Infer the topic proportions of documents, keeping the fitted parameters
        fixed.

        :param dtm: the documents; must use the vocabulary and covariates of the
            fitted model
        :return: the D × K topic proportions
        """
        model = self.model
        if dtm.vocabulary.terms != model.vocabulary.terms:
            raise ConfigurationError(
                "the documents must use the vocabulary of the fitted model"
            )
        if dtm.covariate_names != model.covariate_names:
            raise ConfigurationError(
                "the documents must use the covariates of the fitted model: "
                f"{', '.join(model.covariate_names)}"
            )
        posteriors = run_estep(
            dtm,
            model.beta,
            model.gamma,
            model.sigma,
            sigma_mode=SigmaMode.Point,
            newton_max_iters=model.options.newton_max_iters,
            n_jobs=self.n_jobs,
        )
        return theta_from_eta(np.vstack([posterior.eta for posterior in posteriors]))


__tracker.validate()

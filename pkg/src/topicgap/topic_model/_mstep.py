"""
The M-step: topic-word distributions, prevalence coefficients, and topic
covariance given the posteriors of all documents.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..api import AllTracker, NumericalError
from ..preprocess import DocTermMatrix
from ._estep import DocumentPosterior
from ._options import MIN_EIGENVALUE, FitOptions, SigmaMode

log = logging.getLogger(__name__)

__all__ = [
    "update_beta",
    "update_gamma",
    "update_sigma",
    "mstep",
    "objective",
]

#: Additive smoothing of the expected topic-word counts.
BETA_SMOOTHING = 1e-9

__tracker = AllTracker(globals())


def update_beta(dtm: DocTermMatrix, phis: Sequence[np.ndarray]) -> np.ndarray:
    """
    Estimate the topic-word probabilities from the expected topic-word counts.

    :param dtm: the document-term matrix
    :param phis: the responsibilities of each document, one row per observed term
        in column order of the matrix row
    :return: the K × V row-stochastic topic-word matrix
    """
    weights = np.vstack(phis) * dtm.counts.data[:, np.newaxis]
    n_topics = weights.shape[1]
    expected = np.vstack(
        [
            np.bincount(dtm.counts.indices, weights=weights[:, k], minlength=dtm.n_terms)
            for k in range(n_topics)
        ]
    )
    expected += BETA_SMOOTHING
    return expected / expected.sum(axis=1, keepdims=True)


def update_gamma(
    eta: np.ndarray,
    covariates: np.ndarray,
    ridge: float,
    covariate_names: Optional[Sequence[str]] = None,
    *,
    sigma: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Regress the document modes on the covariates.

    Minimizes ``|eta - X gamma|² + ridge |gamma[1:]|²``, leaving the intercept row
    unpenalized.
    If the topic covariance is given, the residuals are measured in the metric of
    its inverse, which makes the result the exact maximizer of the EM objective
    for that covariance; both coincide if ``ridge`` is 0 or ``sigma`` is the
    identity.

    :param eta: the D × (K-1) document modes
    :param covariates: the D × P design matrix, intercept first
    :param ridge: the ridge penalty
    :param covariate_names: names of the covariates, for error messages
    :param sigma: the current topic covariance (optional)
    :return: the P × (K-1) prevalence coefficients
    :raise NumericalError: the regularized normal equations are singular
    """
    n_covariates = covariates.shape[1]
    weights = _penalized(n_covariates)
    cross = covariates.T @ covariates
    if sigma is None or ridge == 0.0:
        return _solve_ridge(cross, covariates.T @ eta, ridge * weights, covariate_names)

    # one ridge regression per principal axis of sigma
    scales, axes = linalg.eigh((sigma + sigma.T) / 2)
    rotated = covariates.T @ (eta @ axes)
    solved = np.column_stack(
        [
            _solve_ridge(cross, rotated[:, j], ridge * scale * weights, covariate_names)
            for j, scale in enumerate(scales)
        ]
    )
    return solved @ axes.T


def update_sigma(
    eta: np.ndarray,
    covariates: np.ndarray,
    gamma: np.ndarray,
    nus: Optional[Sequence[np.ndarray]] = None,
    *,
    floor: float = MIN_EIGENVALUE,
) -> np.ndarray:
    """
    Estimate the topic covariance from the regression residuals.

    The covariance is the mean of the residual outer products, plus the mean
    posterior covariance if given; it is symmetrized and its eigenvalues are
    floored.

    :param eta: the D × (K-1) document modes
    :param covariates: the D × P design matrix, intercept first
    :param gamma: the P × (K-1) prevalence coefficients
    :param nus: the posterior covariances of all documents, if in Laplace mode
    :param floor: the minimum eigenvalue (default: 1e-8)
    :return: the (K-1) × (K-1) topic covariance
    """
    n_documents = len(eta)
    residuals = eta - covariates @ gamma
    scatter = residuals.T @ residuals
    if nus is not None:
        for nu in nus:
            scatter += nu

    sigma = scatter / n_documents
    sigma = (sigma + sigma.T) / 2

    eigenvalues, eigenvectors = linalg.eigh(sigma)
    if eigenvalues.min() < floor:
        log.debug(f"flooring {np.sum(eigenvalues < floor)} eigenvalues of sigma")
        eigenvalues = np.maximum(eigenvalues, floor)
        sigma = (eigenvectors * eigenvalues) @ eigenvectors.T
        sigma = (sigma + sigma.T) / 2

    return sigma


def mstep(
    dtm: DocTermMatrix,
    posteriors: Sequence[DocumentPosterior],
    sigma: np.ndarray,
    options: FitOptions,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Run the M-step.

    Updates the topic-word probabilities, then the prevalence coefficients given
    the current topic covariance, then the topic covariance given the new
    coefficients.

    :param dtm: the document-term matrix
    :param posteriors: the posteriors of all documents, in matrix row order
    :param sigma: the current topic covariance
    :param options: the fit options, stating the ridge penalty, the covariance
        mode, and the eigenvalue floor of the covariance
    :return: the topic-word probabilities, prevalence coefficients, and topic
        covariance
    """
    eta = np.vstack([posterior.eta for posterior in posteriors])
    beta = update_beta(dtm, [posterior.phi for posterior in posteriors])
    gamma = update_gamma(
        eta, dtm.covariates, options.ridge, dtm.covariate_names, sigma=sigma
    )
    nus: Optional[List[np.ndarray]] = (
        [posterior.nu for posterior in posteriors if posterior.nu is not None]
        if options.sigma_mode is SigmaMode.Laplace
        else None
    )
    sigma = update_sigma(eta, dtm.covariates, gamma, nus, floor=options.sigma_floor)
    return beta, gamma, sigma


def objective(
    posteriors: Sequence[DocumentPosterior],
    gamma: np.ndarray,
    sigma: np.ndarray,
    ridge: float,
) -> float:
    """
    Compute the EM objective of a set of posteriors under the parameters they were
    computed with.

    This is the sum of the document bounds, the normalizing term of the logistic
    normal prior, and the ridge penalty as a Gaussian prior on the non-intercept
    coefficients.
    In Laplace mode the document bounds include the entropy of the posterior
    approximations; their expected prior penalty is constant at the Laplace point
    and is left out.

    :param posteriors: the posteriors of all documents
    :param gamma: the prevalence coefficients
    :param sigma: the topic covariance
    :param ridge: the ridge penalty
    :return: the objective
    """
    n_documents = len(posteriors)
    factor = linalg.cho_factor(sigma, lower=True)
    log_det_sigma = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))

    value = sum(posterior.bound for posterior in posteriors)
    value -= 0.5 * n_documents * log_det_sigma

    penalized = gamma[_penalized(len(gamma)) > 0]
    value -= 0.5 * ridge * float(np.sum(penalized**2))

    return float(value)


__tracker.validate()


def _penalized(n_covariates: int) -> np.ndarray:
    # ridge weights: 0 for the intercept, 1 otherwise
    weights = np.ones(n_covariates)
    weights[0] = 0.0
    return weights


def _solve_ridge(
    cross: np.ndarray,
    target: np.ndarray,
    penalty: np.ndarray,
    covariate_names: Optional[Sequence[str]],
) -> np.ndarray:
    gram = cross + np.diag(penalty)
    try:
        factor = linalg.cho_factor(gram, lower=True)
        pivots = np.diag(factor[0]) ** 2
        if pivots.min() <= pivots.max() * 1e-12:
            raise linalg.LinAlgError("singular normal equations")
        return linalg.cho_solve(factor, target)
    except linalg.LinAlgError:
        names = list(covariate_names or [f"column {i}" for i in range(len(gram))])
        raise NumericalError(
            "cannot estimate prevalence coefficients: covariates "
            f"{', '.join(_collinear(gram, names))} are collinear"
        ) from None


def _collinear(gram: np.ndarray, names: List[str]) -> List[str]:
    # names of the covariates involved in the near-null space of the Gram matrix
    eigenvalues, eigenvectors = linalg.eigh((gram + gram.T) / 2)
    null = eigenvectors[:, eigenvalues <= eigenvalues.max() * 1e-12]
    if null.size == 0:
        null = eigenvectors[:, :1]
    involved = np.any(np.abs(null) > 1e-8, axis=1)
    return [name for name, flag in zip(names, involved) if flag]

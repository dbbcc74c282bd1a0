"""
The E-step: posterior mode and Laplace approximation of one document's topic
proportions.

With ``mu`` the prior mean of a document and ``c`` its term counts, the mode
maximizes

    f(eta) = -1/2 (eta - mu)' inv(Sigma) (eta - mu) + sum_v c_v log sum_k theta_k beta_kv

where ``theta`` is the softmax of ``eta`` extended by a zero.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.special import softmax

from ..api import AllTracker, NumericalError
from ._options import SigmaMode

log = logging.getLogger(__name__)

__all__ = [
    "DocumentPosterior",
    "theta_from_eta",
    "estep_objective",
    "estep_gradient",
    "estep_hessian",
    "estep_document",
]

#: Sufficient ascent per unit of directional derivative in the line search.
ARMIJO_SLOPE = 1e-4

#: Smallest step size of the line search, relative to the Newton step.
MIN_STEP = 1e-10

#: The Newton search stops when half the Newton decrement falls below this value.
NEWTON_TOLERANCE = 1e-10

#: The first diagonal jitter added to a Hessian which is not negative definite.
JITTER = 1e-6

_LOG_2PI = float(np.log(2 * np.pi))

__tracker = AllTracker(globals())


@dataclass(frozen=True, eq=False)
class DocumentPosterior:
    """
    The variational posterior of one document.
    """

    #: the posterior mode, of length K-1
    eta: np.ndarray
    #: responsibilities of the K topics for each observed term; rows sum to 1
    phi: np.ndarray
    #: the document's contribution to the objective
    bound: float
    #: the Laplace approximation of the posterior covariance, if requested
    nu: Optional[np.ndarray]
    #: ``True`` if the mode search did not converge, or the Hessian was regularized
    flagged: bool
    #: the number of Newton iterations run
    iterations: int


def theta_from_eta(eta: np.ndarray) -> np.ndarray:
    """
    Convert modes to topic proportions.

    :param eta: a vector of length K-1, or a matrix with one mode per row
    :return: the softmax of the modes extended by a zero for the reference topic;
        one proportion vector per row for matrices
    :raise NumericalError: the modes have non-finite entries
    """
    eta = np.asarray(eta, dtype=np.float64)
    if not np.all(np.isfinite(eta)):
        raise NumericalError("arg eta has non-finite entries")
    padding = [(0, 0)] * (eta.ndim - 1) + [(0, 1)]
    return softmax(np.pad(eta, padding), axis=-1)


def estep_objective(
    eta: np.ndarray,
    counts: np.ndarray,
    beta_obs: np.ndarray,
    mu: np.ndarray,
    sigma_inv: np.ndarray,
) -> float:
    """
    Evaluate the E-step objective of a document.

    :param eta: the mode, of length K-1
    :param counts: the counts of the observed terms
    :param beta_obs: the K columns of the topic-word matrix for the observed terms
    :param mu: the prior mean, of length K-1
    :param sigma_inv: the inverse topic covariance
    :return: the objective
    """
    residual = eta - mu
    mixture = theta_from_eta(eta) @ beta_obs
    return float(-0.5 * residual @ sigma_inv @ residual + counts @ np.log(mixture))


def estep_gradient(
    eta: np.ndarray,
    counts: np.ndarray,
    beta_obs: np.ndarray,
    mu: np.ndarray,
    sigma_inv: np.ndarray,
) -> np.ndarray:
    """
    Evaluate the gradient of the E-step objective of a document.

    Parameters are as for :func:`.estep_objective`.

    :return: the gradient, of length K-1
    """
    theta, phi = _responsibilities(eta, beta_obs)
    return _gradient(eta, counts, theta, phi, mu, sigma_inv)


def estep_hessian(
    eta: np.ndarray,
    counts: np.ndarray,
    beta_obs: np.ndarray,
    mu: np.ndarray,
    sigma_inv: np.ndarray,
) -> np.ndarray:
    """
    Evaluate the Hessian of the E-step objective of a document.

    Parameters are as for :func:`.estep_objective`.

    :return: the (K-1) × (K-1) Hessian
    """
    theta, phi = _responsibilities(eta, beta_obs)
    return _hessian(counts, theta, phi, sigma_inv)


def estep_document(
    c_d: Union[np.ndarray, Tuple[np.ndarray, np.ndarray]],
    x_d: np.ndarray,
    gamma: np.ndarray,
    sigma: np.ndarray,
    beta: np.ndarray,
    *,
    eta_start: Optional[np.ndarray] = None,
    sigma_mode: SigmaMode = SigmaMode.Laplace,
    newton_max_iters: int = 50,
    sigma_inv: Optional[np.ndarray] = None,
) -> DocumentPosterior:
    """
    Find the posterior mode of a document's topic proportions by Newton's method
    with a backtracking line search.

    If the search does not converge within ``newton_max_iters`` iterations, or the
    line search finds no ascent along the Newton direction, the best point found
    is returned and the document is flagged.
    Where the negative Hessian is not positive definite, a diagonal jitter starting
    at 1e-6 is added until it is, and the document is flagged.

    :param c_d: the term counts of the document, as a dense vector of length V or
        as a tuple of term indices and counts
    :param x_d: the covariates of the document, of length P
    :param gamma: the P × (K-1) prevalence coefficients
    :param sigma: the (K-1) × (K-1) topic covariance
    :param beta: the K × V topic-word probabilities; all entries must be positive
    :param eta_start: the start of the search; the prior mean if not stated
    :param sigma_mode: if :attr:`.SigmaMode.Laplace`, also compute the Laplace
        approximation of the posterior covariance
    :param newton_max_iters: the maximum number of Newton iterations
    :param sigma_inv: the inverse of ``sigma``, if already computed
    :return: the posterior
    """
    indices, counts = _sparse_counts(c_d)
    beta_obs = beta[:, indices]
    mu = np.asarray(x_d, dtype=np.float64) @ gamma
    if sigma_inv is None:
        sigma_inv = _inverse(sigma)

    eta = mu.copy() if eta_start is None else np.array(eta_start, dtype=np.float64)
    flagged = False
    converged = False

    value = estep_objective(eta, counts, beta_obs, mu, sigma_inv)
    iterations = 0
    while iterations < newton_max_iters:
        iterations += 1
        theta, phi = _responsibilities(eta, beta_obs)
        gradient = _gradient(eta, counts, theta, phi, mu, sigma_inv)
        neg_hessian = -_hessian(counts, theta, phi, sigma_inv)

        factor, jittered = _cholesky(neg_hessian)
        flagged |= jittered
        step = linalg.cho_solve(factor, gradient)
        slope = float(gradient @ step)
        if slope / 2 < NEWTON_TOLERANCE:
            converged = True
            break

        t = 1.0
        while True:
            candidate = eta + t * step
            candidate_value = estep_objective(candidate, counts, beta_obs, mu, sigma_inv)
            if candidate_value >= value + ARMIJO_SLOPE * t * slope:
                break
            t /= 2
            if t < MIN_STEP:
                break

        if t < MIN_STEP:
            # no ascent along the Newton direction: the current point is the best
            log.debug(
                f"line search stalled after {iterations} Newton iterations "
                f"with Newton decrement {slope / 2:.3g}"
            )
            break

        eta, value = candidate, candidate_value

    if not converged:
        flagged = True

    theta, phi = _responsibilities(eta, beta_obs)

    nu: Optional[np.ndarray]
    if sigma_mode is SigmaMode.Laplace:
        factor, jittered = _cholesky(-_hessian(counts, theta, phi, sigma_inv))
        flagged |= jittered
        nu = linalg.cho_solve(factor, np.eye(len(eta)))
        nu = (nu + nu.T) / 2
        # log det nu = -log det of the negative Hessian
        log_det_nu = -2.0 * float(np.sum(np.log(np.diag(factor[0]))))
        bound = value + 0.5 * log_det_nu + 0.5 * len(eta) * _LOG_2PI
    else:
        nu = None
        bound = value

    if not np.isfinite(bound):
        raise NumericalError("the E-step objective is not finite")

    return DocumentPosterior(
        eta=eta,
        phi=phi.T,
        bound=bound,
        nu=nu,
        flagged=flagged,
        iterations=iterations,
    )


__tracker.validate()


def _sparse_counts(
    c_d: Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]
) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(c_d, tuple):
        indices, counts = c_d
        return np.asarray(indices, dtype=np.intp), np.asarray(counts, dtype=np.float64)
    dense = np.asarray(c_d, dtype=np.float64)
    indices = np.flatnonzero(dense)
    return indices, dense[indices]


def _responsibilities(
    eta: np.ndarray, beta_obs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    # returns theta (K) and phi (K × n_obs) with columns summing to 1
    theta = theta_from_eta(eta)
    weighted = theta[:, np.newaxis] * beta_obs
    return theta, weighted / weighted.sum(axis=0)


def _gradient(
    eta: np.ndarray,
    counts: np.ndarray,
    theta: np.ndarray,
    phi: np.ndarray,
    mu: np.ndarray,
    sigma_inv: np.ndarray,
) -> np.ndarray:
    expected = phi @ counts - counts.sum() * theta
    return expected[:-1] - sigma_inv @ (eta - mu)


def _hessian(
    counts: np.ndarray, theta: np.ndarray, phi: np.ndarray, sigma_inv: np.ndarray
) -> np.ndarray:
    n = counts.sum()
    weighted_phi = phi * counts
    likelihood = (
        np.diag(weighted_phi.sum(axis=1))
        - weighted_phi @ phi.T
        - n * (np.diag(theta) - np.outer(theta, theta))
    )
    return likelihood[:-1, :-1] - sigma_inv


def _cholesky(matrix: np.ndarray) -> Tuple[Tuple[np.ndarray, bool], bool]:
    # Cholesky factor of a symmetric matrix, adding diagonal jitter until positive
    # definite; also returns whether jitter was needed
    matrix = (matrix + matrix.T) / 2
    jitter = 0.0
    identity = np.eye(len(matrix))
    while True:
        try:
            return linalg.cho_factor(matrix + jitter * identity, lower=True), jitter > 0
        except linalg.LinAlgError:
            jitter = JITTER if jitter == 0 else jitter * 10
            if jitter > 1e6:
                raise NumericalError("cannot regularize the E-step Hessian")


def _inverse(sigma: np.ndarray) -> np.ndarray:
    try:
        factor = linalg.cho_factor(sigma, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError(f"the topic covariance is not positive definite: {e}") from e
    inverse = linalg.cho_solve(factor, np.eye(len(sigma)))
    return (inverse + inverse.T) / 2

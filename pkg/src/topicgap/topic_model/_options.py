"""
Options of the topic model fit.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from enum import Enum
from typing import Any, Dict, Mapping

from ..api import AllTracker, ConfigurationError

log = logging.getLogger(__name__)

__all__ = ["SigmaMode", "InitMode", "FitOptions"]

#: Smallest eigenvalue of a topic covariance matrix.
MIN_EIGENVALUE = 1e-8

__tracker = AllTracker(globals())


class SigmaMode(Enum):
    """
    How the posterior uncertainty of each document's topic proportions enters the
    covariance update.
    """

    #: use the posterior modes only
    Point = "Point"
    #: add the Laplace approximation of each document's posterior covariance
    Laplace = "Laplace"


class InitMode(Enum):
    """
    How the topic-word distributions are initialized.
    """

    #: draw each topic from a symmetric Dirichlet(0.1) distribution
    RandomDirichlet = "RandomDirichlet"
    #: run a short collapsed Gibbs sampler for plain LDA
    SeededLda = "SeededLda"


@dataclass(frozen=True)
class FitOptions:
    """
    Options of the variational EM fit.
    """

    #: maximum number of EM iterations
    max_em_iters: int = 200
    #: the fit has converged when the relative change of the objective falls below
    #: this value
    tolerance: float = 1e-5
    #: ridge penalty on the non-intercept rows of the prevalence coefficients
    ridge: float = 1.0
    #: use of the posterior covariances in the covariance update
    sigma_mode: SigmaMode = SigmaMode.Laplace
    #: initialization of the topic-word distributions
    init: InitMode = InitMode.SeededLda
    #: maximum number of Newton iterations per document and E-step
    newton_max_iters: int = 50
    #: number of Gibbs sweeps of the LDA initialization
    lda_sweeps: int = 20
    #: eigenvalues of the topic covariance are floored at this value after each
    #: M-step; raising it keeps Point-mode fits away from a collapsed covariance
    sigma_floor: float = MIN_EIGENVALUE

    def __post_init__(self) -> None:
        # accept enum values as found in configuration files
        object.__setattr__(self, "sigma_mode", SigmaMode(self.sigma_mode))
        object.__setattr__(self, "init", InitMode(self.init))

        for name in ("max_em_iters", "newton_max_iters", "lda_sweeps"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigurationError(f"arg {name} must be a positive integer but is {value!r}")
        if not self.tolerance > 0:
            raise ConfigurationError(
                f"arg tolerance must be positive but is {self.tolerance!r}"
            )
        if not self.ridge >= 0:
            raise ConfigurationError(
                f"arg ridge must not be negative but is {self.ridge!r}"
            )
        if not self.sigma_floor >= MIN_EIGENVALUE:
            raise ConfigurationError(
                f"arg sigma_floor must be at least {MIN_EIGENVALUE} "
                f"but is {self.sigma_floor!r}"
            )

    def to_dict(self) -> Dict[str, Any]:
        """
        :return: these options as a JSON-serializable dictionary
        """
        return {
            f.name: value.value if isinstance(value, Enum) else value
            for f in fields(self)
            for value in [getattr(self, f.name)]
        }

    @classmethod
    def from_dict(cls, options: Mapping[str, Any]) -> FitOptions:
        """
        Create options from a dictionary as returned by :meth:`.to_dict`.

        :param options: the options; missing keys take their defaults
        :return: the options
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(options) - known)
        if unknown:
            raise ConfigurationError(f"unknown fit options: {', '.join(unknown)}")
        try:
            return cls(**options)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"invalid fit options: {e}") from e


__tracker.validate()

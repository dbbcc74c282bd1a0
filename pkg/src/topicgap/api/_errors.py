"""
Exception hierarchy of :mod:`topicgap`.
"""

import logging

from ._alltracker import AllTracker

log = logging.getLogger(__name__)

__all__ = [
    "TopicGapError",
    "ConfigurationError",
    "DataError",
    "NumericalError",
]

__tracker = AllTracker(globals())


class TopicGapError(Exception):
    """
    Base class of all errors raised deliberately by :mod:`topicgap`.
    """

    #: Process exit code used by the command line interface for this error type.
    exit_code: int = 1


class ConfigurationError(TopicGapError, ValueError):
    """
    Raised for invalid options or configuration: missing mapped columns, empty
    vocabularies, invalid period tables, mismatched tokenizer options, and stale
    upstream artifacts.
    """

    exit_code = 2


class DataError(TopicGapError, ValueError):
    """
    Raised when input data violates a requirement, e.g., a document lacks a
    covariate field or has a year outside all periods.
    """

    exit_code = 3


class NumericalError(TopicGapError, ArithmeticError):
    """
    Raised when a computation cannot proceed, e.g., a singular regression system or
    non-finite intermediate values.
    """

    exit_code = 4


__tracker.validate()

"""
Core implementation of :mod:`topicgap.fit`.
"""
import functools
import logging
from abc import ABCMeta, abstractmethod
from typing import Any, Callable, Generic, TypeVar, cast

from ..api import AllTracker, TopicGapError

log = logging.getLogger(__name__)

__all__ = ["NotFittedError", "FittableMixin", "fitted_only"]

T_Estimator = TypeVar("T_Estimator", bound="FittableMixin[Any]")
T_Data = TypeVar("T_Data")
T_Method = TypeVar("T_Method", bound=Callable[..., Any])

__tracker = AllTracker(globals())


class NotFittedError(TopicGapError, AttributeError):
    """
    Raised when a method needing fitted parameters is called on an estimator that
    has not been fitted yet.
    """


class FittableMixin(Generic[T_Data], metaclass=ABCMeta):
    """
    Mix-in for estimators with parameters learned from data of type ``T_Data``.

    Accessors of the learned parameters are decorated with :func:`fitted_only`.
    """

    @abstractmethod
    def fit(self: T_Estimator, __x: T_Data, **fit_params: Any) -> T_Estimator:
        """
        Learn the parameters of this estimator.

        :param __x: the training data
        :param fit_params: estimator-specific fit arguments
        :return: ``self``
        """

    @property
    @abstractmethod
    def is_fitted(self) -> bool:
        """
        ``True`` once :meth:`.fit` has completed.
        """


def fitted_only(method: T_Method) -> T_Method:
    """
    Restrict a method, or the getter of a property, to fitted estimators.

    :param method: the method; its class must define a boolean property
        ``is_fitted``
    :return: the wrapped method, raising :class:`.NotFittedError` if called
        before the estimator is fitted
    """

    @functools.wraps(method)
    def _fitted_only(self: FittableMixin[Any], *args: Any, **kwargs: Any) -> Any:
        if not self.is_fitted:
            raise NotFittedError(
                f"{type(self).__name__} is not fitted: "
                f"call fit() before {method.__name__}()"
            )
        return method(self, *args, **kwargs)

    return cast(T_Method, _fitted_only)


__tracker.validate()

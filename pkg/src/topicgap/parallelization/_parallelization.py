"""
Core implementation of :mod:`topicgap.parallelization`.
"""
from __future__ import annotations

import logging
from abc import ABCMeta, abstractmethod
from functools import wraps
from typing import Any, Callable, Dict, Generic, Iterable, List, Optional, Sequence, TypeVar

import joblib

from ..api import AllTracker

log = logging.getLogger(__name__)

__all__ = ["Job", "JobRunner", "ParallelizableMixin", "chunk_ranges"]

T_Job_Result = TypeVar("T_Job_Result")

__tracker = AllTracker(globals())


class ParallelizableMixin:
    """
    Mix-in for objects running parts of their work in :mod:`joblib` workers.

    Work is always split independently of the number of workers (see
    :func:`.chunk_ranges`), so the worker count never changes a result.
    """

    #: maximum number of parallel workers; if ``None``, use the joblib default
    n_jobs: Optional[int]

    #: if ``True``, run workers as threads sharing memory with the caller;
    #: otherwise as processes
    shared_memory: Optional[bool]

    #: joblib verbosity; if ``None``, use the joblib default
    verbose: Optional[int]

    def __init__(
        self,
        *,
        n_jobs: Optional[int] = None,
        shared_memory: Optional[bool] = None,
        verbose: Optional[int] = None,
    ) -> None:
        """
        :param n_jobs: maximum number of parallel workers (default: joblib default)
        :param shared_memory: if ``True``, use threads; if ``False`` or ``None``,
            use processes (default: ``None``)
        :param verbose: joblib verbosity (default: joblib default)
        """
        super().__init__()
        self.n_jobs = n_jobs
        self.shared_memory = shared_memory
        self.verbose = verbose

    def _parallel_kwargs(self) -> Dict[str, Any]:
        kwargs: Dict[str, Any] = {
            "n_jobs": self.n_jobs,
            "require": "sharedmem" if self.shared_memory else None,
            "verbose": self.verbose,
        }
        return {name: value for name, value in kwargs.items() if value is not None}


class Job(Generic[T_Job_Result], metaclass=ABCMeta):
    """
    A unit of work run by a :class:`.JobRunner`, e.g., the E-step of one chunk of
    documents.
    """

    @abstractmethod
    def run(self) -> T_Job_Result:
        """
        Run this job.

        :return: the result of the job
        """

    @classmethod
    def delayed(
        cls, function: Callable[..., T_Job_Result]
    ) -> Callable[..., Job[T_Job_Result]]:
        """
        Decorate a function so that calling it creates a :class:`.Job` instead of
        running the function; the job calls the function with the same arguments
        when it is run.

        :param function: the function to run as a job
        :return: the job factory
        """

        @wraps(function)
        def _job_factory(*args: Any, **kwargs: Any) -> Job[T_Job_Result]:
            return _FunctionJob(function, args, kwargs)

        return _job_factory


class JobRunner(ParallelizableMixin):
    """
    Runs jobs in parallel workers and collects their results in job order.
    """

    def run_jobs(self, jobs: Iterable[Job[T_Job_Result]]) -> List[T_Job_Result]:
        """
        Run the given jobs.

        Jobs run in the calling thread if there is only one job or one worker.

        :param jobs: the jobs to run
        :return: the result of each job, in the order of the jobs
        """
        jobs = list(jobs)
        if self.n_jobs == 1 or len(jobs) <= 1:
            return [job.run() for job in jobs]

        log.debug(f"running {len(jobs)} jobs with n_jobs={self.n_jobs}")
        with joblib.Parallel(**self._parallel_kwargs()) as parallel:
            results: List[T_Job_Result] = parallel(
                joblib.delayed(job.run)() for job in jobs
            )

        if len(results) != len(jobs):
            raise AssertionError(f"expected {len(jobs)} job results but got {len(results)}")
        return results


def chunk_ranges(n: int, n_chunks: int) -> List[range]:
    """
    Split the index range ``0 … n-1`` into at most ``n_chunks`` contiguous ranges of
    near-equal size.

    :param n: the number of items
    :param n_chunks: the maximum number of chunks
    :return: the non-empty ranges, in ascending order
    """
    if n_chunks < 1:
        raise ValueError(f"arg n_chunks must be positive but is {n_chunks}")
    n_chunks = min(n_chunks, n) or 1
    bounds: Sequence[int] = [round(i * n / n_chunks) for i in range(n_chunks + 1)]
    return [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


__tracker.validate()


class _FunctionJob(Job[T_Job_Result]):
    # created by Job.delayed()

    def __init__(
        self, function: Callable[..., T_Job_Result], args: Any, kwargs: Any
    ) -> None:
        self._function = function
        self._args = args
        self._kwargs = kwargs

    def run(self) -> T_Job_Result:
        """[see superclass]"""
        return self._function(*self._args, **self._kwargs)

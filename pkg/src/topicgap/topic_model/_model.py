"""
The fitted topic model, and its directory format.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..api import AllTracker, DataError, NumericalError, stable_hash
from ..preprocess import Vocabulary
from ._estep import theta_from_eta
from ._options import FitOptions

log = logging.getLogger(__name__)

__all__ = ["StmModel", "save_model", "load_model", "vocabulary_hash"]

#: Number of top words listed per topic in ``topics.csv``.
N_TOPIC_WORDS = 20

_HEADER = "model.json"
_MATRICES = ("beta", "gamma", "sigma", "eta")

__tracker = AllTracker(globals())


@dataclass(frozen=True, eq=False)
class StmModel:
    """
    The parameters of a structural topic model, and the per-document variational
    modes it was fitted with.

    With K topics, V terms, P covariates and D documents:

    - ``beta`` is the K × V matrix of topic-word probabilities
    - ``gamma`` is the P × (K-1) matrix of prevalence coefficients
    - ``sigma`` is the (K-1) × (K-1) topic covariance
    - ``eta`` is the D × (K-1) matrix of per-document modes

    The topic proportions of a document are the softmax of its mode, extended by
    a zero for the reference topic K.
    """

    beta: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    eta: np.ndarray
    #: the vocabulary of the columns of ``beta``
    vocabulary: Vocabulary
    #: names of the rows of ``gamma``
    covariate_names: Tuple[str, ...]
    #: ids of the documents of the rows of ``eta``
    doc_ids: Tuple[str, ...]
    #: the objective after each EM iteration
    elbo_trace: Tuple[float, ...] = ()
    #: the seed of the random generator used in the fit
    seed: int = 0
    #: the options of the fit
    options: FitOptions = field(default_factory=FitOptions)
    #: ``True`` if the objective converged before the iteration limit
    converged: bool = False
    #: indices of documents whose posterior mode search did not converge, or whose
    #: Hessian needed regularization, in the last E-step
    flagged: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for name in _MATRICES:
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=np.float64)
            )
        object.__setattr__(self, "elbo_trace", tuple(map(float, self.elbo_trace)))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        object.__setattr__(self, "doc_ids", tuple(self.doc_ids))
        object.__setattr__(self, "flagged", tuple(self.flagged))

        k, v = self.beta.shape
        if k < 2:
            raise ValueError(f"a topic model requires at least 2 topics but has {k}")
        expected = {
            "gamma": (len(self.covariate_names), k - 1),
            "sigma": (k - 1, k - 1),
            "eta": (len(self.doc_ids), k - 1),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ValueError(f"arg {name} must have shape {shape} but has {actual}")
        if v != len(self.vocabulary):
            raise ValueError(
                f"beta has {v} columns but the vocabulary has "
                f"{len(self.vocabulary)} terms"
            )
        for name in _MATRICES:
            if not np.all(np.isfinite(getattr(self, name))):
                raise NumericalError(f"{name} has non-finite entries")

    @property
    def n_topics(self) -> int:
        """
        The number of topics K.
        """
        return int(self.beta.shape[0])

    @property
    def n_terms(self) -> int:
        """
        The number of terms V.
        """
        return int(self.beta.shape[1])

    @property
    def n_iterations(self) -> int:
        """
        The number of EM iterations run.
        """
        return len(self.elbo_trace)

    @property
    def theta(self) -> np.ndarray:
        """
        The D × K topic proportions of the fitted documents.
        """
        return theta_from_eta(self.eta)

    def prevalence(self) -> np.ndarray:
        """
        :return: the mean topic proportions over all fitted documents
        """
        theta = self.theta
        if len(theta) == 0:
            return np.full(self.n_topics, np.nan)
        return theta.mean(axis=0)


def vocabulary_hash(vocabulary: Vocabulary) -> str:
    """
    Identify the terms and tokenizer options of a vocabulary.

    :param vocabulary: the vocabulary
    :return: a SHA-256 hex digest
    """
    return stable_hash({"terms": list(vocabulary.terms), "options": vocabulary.options_hash})


def save_model(model: StmModel, directory: Union[str, Path]) -> None:
    """
    Write a model to a directory.

    The matrices are written as little-endian 64-bit floats in row-major order, to
    files ``beta.bin``, ``gamma.bin``, ``sigma.bin`` and ``eta.bin``; file
    ``model.json`` states their shapes along with the vocabulary hash, seed,
    options and fit trace.
    The vocabulary is written to ``vocabulary.json``, and the top words and overall
    prevalence of each topic to ``topics.csv``.

    :param model: the model
    :param directory: the directory; created if it does not exist
    """
    from ._diagnostics import topic_top_words

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    for name in _MATRICES:
        matrix = np.ascontiguousarray(getattr(model, name), dtype="<f8")
        (directory / f"{name}.bin").write_bytes(matrix.tobytes(order="C"))

    header: Dict[str, Any] = {
        "shapes": {name: list(getattr(model, name).shape) for name in _MATRICES},
        "vocabulary_hash": vocabulary_hash(model.vocabulary),
        "seed": model.seed,
        "options": model.options.to_dict(),
        "elbo_trace": list(model.elbo_trace),
        "converged": model.converged,
        "flagged": list(model.flagged),
        "covariate_names": list(model.covariate_names),
        "doc_ids": list(model.doc_ids),
    }
    (directory / _HEADER).write_text(
        json.dumps(header, indent=1, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    model.vocabulary.save(directory / "vocabulary.json")

    top_words = topic_top_words(model.beta, model.vocabulary, min(N_TOPIC_WORDS, model.n_terms))
    pd.DataFrame(
        {
            "topic": range(1, model.n_topics + 1),
            "top_words": [" ".join(words) for words in top_words],
            "prevalence": model.prevalence(),
        }
    ).to_csv(
        directory / "topics.csv", index=False, float_format="%.6g", lineterminator="\n"
    )


def load_model(directory: Union[str, Path]) -> StmModel:
    """
    Read a model written by :func:`.save_model`.

    :param directory: the directory
    :return: the model
    :raise DataError: the files are incomplete or inconsistent
    """
    directory = Path(directory)
    try:
        header = json.loads((directory / _HEADER).read_text(encoding="utf-8"))
        vocabulary = Vocabulary.load(directory / "vocabulary.json")
        matrices: Dict[str, np.ndarray] = {}
        for name in _MATRICES:
            shape: List[int] = header["shapes"][name]
            data = np.frombuffer((directory / f"{name}.bin").read_bytes(), dtype="<f8")
            matrices[name] = data.reshape(shape).astype(np.float64)
    except (OSError, KeyError, ValueError) as e:
        raise DataError(f"cannot read model from {directory}: {e}") from e

    if header["vocabulary_hash"] != vocabulary_hash(vocabulary):
        raise DataError(f"the vocabulary of the model in {directory} has been modified")

    return StmModel(
        **matrices,
        vocabulary=vocabulary,
        covariate_names=tuple(header["covariate_names"]),
        doc_ids=tuple(header["doc_ids"]),
        elbo_trace=tuple(header["elbo_trace"]),
        seed=header["seed"],
        options=FitOptions.from_dict(header["options"]),
        converged=header["converged"],
        flagged=tuple(header["flagged"]),
    )


__tracker.validate()

"""
The pipeline configuration: a tree of frozen dataclasses read from one JSON
document.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from ..api import AllTracker, ConfigurationError, stable_hash
from ..corpus import parse_query
from ..preprocess import CovariateSpec, PeriodTable, TokenizerOptions, VocabularyOptions
from ..topic_model import FitOptions

log = logging.getLogger(__name__)

__all__ = [
    "LayerConfig",
    "NetworkConfig",
    "GapConfig",
    "PipelineConfig",
    "stage_seed",
    "resolve_config_path",
]

#: Environment variable naming the default configuration file.
ENV_CONFIG = "TOPICGAP_CONFIG"

#: Names of the two layers, in processing order.
LAYERS = ("research", "projects")

__tracker = AllTracker(globals())


@dataclass(frozen=True)
class LayerConfig:
    """
    Settings of one corpus layer.
    """

    #: the input file, as written in the configuration; relative paths are resolved
    #: against the directory of the configuration file
    path: str
    #: map of document field names to input column names
    mapping: Mapping[str, str]
    #: the prevalence covariates (default: intercept only)
    covariates: CovariateSpec = field(default_factory=CovariateSpec)
    #: the number of topics (no default; required by stages ``fit`` and later)
    k: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        """
        :return: these settings as a JSON-serializable dictionary
        """
        return {
            "path": self.path,
            "mapping": dict(sorted(self.mapping.items())),
            "covariates": {
                "categorical": list(self.covariates.categorical),
                "numeric": list(self.covariates.numeric),
            },
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, name: str, data: Mapping[str, Any]) -> LayerConfig:
        """
        :param name: the layer name, for error messages
        :param data: the layer section of a configuration
        :return: the layer settings
        """
        _check_keys(name, data, {"path", "mapping", "covariates", "k"}, {"path", "mapping"})
        covariates = data.get("covariates") or {}
        _check_keys(f"{name}.covariates", covariates, {"categorical", "numeric"})
        k = data.get("k")
        if k is not None and (not isinstance(k, int) or isinstance(k, bool) or k < 2):
            raise ConfigurationError(f"{name}.k must be an integer of at least 2 but is {k!r}")
        return cls(
            path=str(data["path"]),
            mapping={str(key): str(value) for key, value in dict(data["mapping"]).items()},
            covariates=CovariateSpec(
                categorical=tuple(covariates.get("categorical", ())),
                numeric=tuple(covariates.get("numeric", ())),
            ),
            k=k,
        )


@dataclass(frozen=True)
class NetworkConfig:
    """
    Settings of the topic correlation networks.
    """

    #: edges link topic pairs with a correlation above this threshold (default: 0.01)
    threshold: float = 0.01


@dataclass(frozen=True)
class GapConfig:
    """
    Settings of the cross-layer gap analysis.
    """

    #: if set, compare topics on their ``top_m`` most probable terms only
    #: (default: compare full distributions)
    top_m: Optional[int] = None
    #: the number of least connected topics reported per layer (default: 5)
    n: int = 5

    def __post_init__(self) -> None:
        if self.top_m is not None and self.top_m < 1:
            raise ConfigurationError(f"gap.top_m must be positive but is {self.top_m}")
        if self.n < 1:
            raise ConfigurationError(f"gap.n must be positive but is {self.n}")


@dataclass(frozen=True)
class PipelineConfig:
    """
    The complete configuration of a pipeline run.

    Keys of the JSON document and their defaults:

    - ``research``, ``projects``: layer sections with keys ``path``, ``mapping``,
      ``covariates`` (``categorical`` and ``numeric`` field lists) and ``k``;
      ``path`` and ``mapping`` are required
    - ``output``: the output directory (default: ``"out"`` next to the
      configuration file); overridden by flag ``--out``
    - ``query``: the boolean query both layers are filtered with (default: no
      filtering); overridden by flag ``--query``
    - ``tokenizer``: :class:`.TokenizerOptions` fields
    - ``vocabulary``: :class:`.VocabularyOptions` fields
    - ``min_tokens``: minimum vocabulary tokens of a retained document (default: 10)
    - ``periods``: list of ``{"label", "start", "end"}`` records (default: the
      assessment report periods of :meth:`.PeriodTable.default`)
    - ``fit``: :class:`.FitOptions` fields
    - ``k_grid``: numbers of topics compared by stage ``diagnose`` (default: none);
      overridden by flag ``--k-grid``
    - ``network``: key ``threshold`` (default: 0.01)
    - ``gap``: keys ``top_m`` (default: none) and ``n`` (default: 5)
    - ``seed``: the master seed (default: 0); overridden by flag ``--seed``
    - ``threads``: the maximum number of worker threads (default: 1); overridden
      by flag ``--threads``
    """

    research: LayerConfig
    projects: LayerConfig
    #: the directory relative input paths are resolved against
    base_dir: Path = field(default=Path("."), compare=False)
    output: Optional[Path] = None
    query: Optional[str] = None
    tokenizer: TokenizerOptions = field(default_factory=TokenizerOptions)
    vocabulary: VocabularyOptions = field(default_factory=VocabularyOptions)
    min_tokens: int = 10
    periods: PeriodTable = field(default_factory=PeriodTable.default)
    fit: FitOptions = field(default_factory=FitOptions)
    k_grid: Tuple[int, ...] = ()
    network: NetworkConfig = field(default_factory=NetworkConfig)
    gap: GapConfig = field(default_factory=GapConfig)
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "k_grid", tuple(self.k_grid))
        if self.min_tokens < 1:
            raise ConfigurationError(f"min_tokens must be positive but is {self.min_tokens}")
        if self.threads < 1:
            raise ConfigurationError(f"threads must be positive but is {self.threads}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must not be negative but is {self.seed}")
        if any(k < 2 for k in self.k_grid):
            raise ConfigurationError(f"k_grid values must be at least 2 but are {list(self.k_grid)}")

    def layer(self, name: str) -> LayerConfig:
        """
        :param name: ``"research"`` or ``"projects"``
        :return: the settings of the layer
        """
        if name not in LAYERS:
            raise ValueError(f"arg name must be one of {', '.join(LAYERS)} but is {name!r}")
        layer: LayerConfig = getattr(self, name)
        return layer

    def input_path(self, name: str) -> Path:
        """
        :param name: the layer name
        :return: the resolved input file of the layer
        """
        path = Path(self.layer(name).path)
        return path if path.is_absolute() else self.base_dir / path

    @property
    def output_dir(self) -> Path:
        """
        The resolved output directory.
        """
        if self.output is None:
            return self.base_dir / "out"
        return self.output if self.output.is_absolute() else self.base_dir / self.output

    def to_dict(self) -> Dict[str, Any]:
        """
        The effective configuration as a JSON-serializable dictionary.

        The output directory and thread count are omitted: neither changes the
        results.

        :return: the configuration
        """
        return {
            "research": self.research.to_dict(),
            "projects": self.projects.to_dict(),
            "query": self.query,
            "tokenizer": {
                f.name: list(value) if isinstance(value, tuple) else value
                for f in fields(self.tokenizer)
                for value in [getattr(self.tokenizer, f.name)]
            },
            "vocabulary": {
                "min_df": self.vocabulary.min_df,
                "max_df_ratio": self.vocabulary.max_df_ratio,
            },
            "min_tokens": self.min_tokens,
            "periods": self.periods.to_records(),
            "fit": self.fit.to_dict(),
            "k_grid": list(self.k_grid),
            "network": {"threshold": self.network.threshold},
            "gap": {"top_m": self.gap.top_m, "n": self.gap.n},
            "seed": self.seed,
        }

    @property
    def config_hash(self) -> str:
        """
        SHA-256 hex digest of the canonical JSON of :meth:`.to_dict`.
        """
        return stable_hash(self.to_dict())

    def with_overrides(
        self,
        *,
        seed: Optional[int] = None,
        threads: Optional[int] = None,
        output: Union[str, Path, None] = None,
        query: Optional[str] = None,
        k_grid: Optional[Tuple[int, ...]] = None,
    ) -> PipelineConfig:
        """
        Apply command line flags, which take precedence over configuration keys.

        :return: the configuration with all stated values replaced
        """
        changes: Dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = seed
        if threads is not None:
            changes["threads"] = threads
        if output is not None:
            # flags are relative to the working directory, not the config file
            changes["output"] = Path(output).absolute()
        if query is not None:
            changes["query"] = query
        if k_grid is not None:
            changes["k_grid"] = tuple(k_grid)
        return replace(self, **changes) if changes else self

    def validate(self) -> None:
        """
        Check everything that can be checked before any work is done: input files
        exist, the query parses, and the gap report size fits the topic counts.

        :raise ConfigurationError: the configuration is invalid
        """
        missing = [
            str(self.input_path(name)) for name in LAYERS if not self.input_path(name).is_file()
        ]
        if missing:
            raise ConfigurationError(f"input files not found: {', '.join(missing)}")
        if self.query is not None:
            parse_query(self.query)
        for name in LAYERS:
            if self.layer(name).covariates.uses_periods and not len(self.periods):
                raise ConfigurationError(f"{name} uses period covariates without periods")
        ks = [k for k in (self.layer(name).k for name in LAYERS) if k is not None]
        if len(ks) == len(LAYERS) and self.gap.n > min(ks):
            raise ConfigurationError(
                f"gap.n must not exceed the smaller number of topics {min(ks)} "
                f"but is {self.gap.n}"
            )
        if self.gap.top_m is not None and self.gap.top_m < 2:
            log.warning("gap.top_m below 2 compares single terms only")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: Union[str, Path] = ".") -> PipelineConfig:
        """
        Create a configuration from a parsed JSON document.

        :param data: the JSON document
        :param base_dir: the directory relative paths are resolved against
        :return: the configuration
        :raise ConfigurationError: the document has unknown or invalid keys
        """
        if not isinstance(data, Mapping):
            raise ConfigurationError("the configuration must be a JSON object")
        _check_keys("config", data, _KEYS, {"research", "projects"})

        try:
            kwargs: Dict[str, Any] = dict(
                research=LayerConfig.from_dict("research", data["research"]),
                projects=LayerConfig.from_dict("projects", data["projects"]),
                base_dir=Path(base_dir).absolute(),
                tokenizer=TokenizerOptions(**data.get("tokenizer", {})),
                vocabulary=VocabularyOptions(**data.get("vocabulary", {})),
                fit=FitOptions.from_dict(data.get("fit", {})),
                network=NetworkConfig(**data.get("network", {})),
                gap=GapConfig(**data.get("gap", {})),
            )
        except TypeError as e:
            raise ConfigurationError(f"invalid configuration section: {e}") from e

        if data.get("output") is not None:
            kwargs["output"] = Path(data["output"])
        if "periods" in data:
            kwargs["periods"] = PeriodTable.from_records(data["periods"])
        for key in ("query", "min_tokens", "seed", "threads"):
            if key in data:
                kwargs[key] = data[key]
        if "k_grid" in data:
            kwargs["k_grid"] = tuple(int(k) for k in data["k_grid"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> PipelineConfig:
        """
        Read a configuration file; relative paths in it are resolved against its
        directory.

        :param path: the path of the JSON file
        :return: the configuration
        :raise ConfigurationError: the file is missing, is not valid JSON, or is not
            a valid configuration
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"configuration file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"configuration file {path} is not valid JSON: {e}") from e
        log.debug(f"read configuration from {path}")
        return cls.from_dict(data, base_dir=path.parent)


def stage_seed(master_seed: int, stage: str) -> int:
    """
    Derive the seed of a pipeline stage from the master seed.

    :param master_seed: the master seed
    :param stage: the stage name
    :return: the first 4 bytes of the SHA-256 digest of ``"{master_seed}:{stage}"``,
        as an unsigned integer
    """
    digest = hashlib.sha256(f"{master_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], byteorder="big", signed=False)


def resolve_config_path(path: Optional[str]) -> Path:
    """
    Get the configuration file from a command line flag, or else from environment
    variable ``TOPICGAP_CONFIG``.

    :param path: the value of the ``--config`` flag, if given
    :return: the path of the configuration file
    :raise ConfigurationError: neither the flag nor the variable is set
    """
    path = path or os.environ.get(ENV_CONFIG, "").strip() or None
    if path is None:
        raise ConfigurationError(
            f"no configuration given: use flag --config or set {ENV_CONFIG}"
        )
    return Path(path)


__tracker.validate()


_KEYS = {
    "research",
    "projects",
    "output",
    "query",
    "tokenizer",
    "vocabulary",
    "min_tokens",
    "periods",
    "fit",
    "k_grid",
    "network",
    "gap",
    "seed",
    "threads",
}


def _check_keys(
    section: str,
    data: Mapping[str, Any],
    known: Any,
    required: Any = (),
) -> None:
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{section} must be a JSON object")
    unknown: List[str] = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(f"unknown keys in {section}: {', '.join(unknown)}")
    absent = sorted(set(required) - set(data))
    if absent:
        raise ConfigurationError(f"missing keys in {section}: {', '.join(absent)}")

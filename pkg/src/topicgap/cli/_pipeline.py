"""
The staged pipeline from input files to the gap report.

All artifacts are written to one output directory::

    out/
      config.json            effective configuration, without threads and output
      manifest.json          every artifact with its SHA-256 checksum
      ingest/                research.jsonl, projects.jsonl (+ .meta.json),
                             <layer>_skipped.csv, summary.json
      filter/                research.jsonl, projects.jsonl (+ .meta.json),
                             query.txt, summary.json
      preprocess/<layer>/    dtm/ (counts, vocabulary, covariates),
                             lexical_diversity.csv, term_frequencies.csv
      fit/<layer>/           model.json, *.bin, vocabulary.json, topics.csv
      diagnose/<layer>/      diagnostics.csv
      network/<layer>/       edges.csv, nodes.csv, graph.graphml,
                             sigma_correlation.csv, prevalence.csv, summary.json
      gap/                   gap_matrix.{csv,bin,json}, rankings.csv, report.json
      report/                report.md and its tables as CSV

Each stage directory holds a ``stage.json`` record with the hash of the
configuration it was produced with; stages refuse upstream artifacts produced
with a different configuration.
"""
from __future__ import annotations

import hashlib
import json
import logging
import shutil
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..api import AllTracker, ConfigurationError, DataError
from ..corpus import (
    CorpusLayer,
    Programme,
    filter_layer,
    parse_bibliographic,
    parse_projects,
    parse_query,
    serialize_query,
)
from ..gap import align_vocabularies, cross_layer_matrix, cumulative_similarity, gap_report
from ..network import (
    correlation_graph,
    density,
    prevalence_by_covariate,
    sigma_correlation,
    write_graph,
)
from ..preprocess import (
    DocTermMatrix,
    build_vocabulary,
    lexical_diversity,
    term_frequencies_by_period,
    tokenize_layer,
    vectorize,
)
from ..preprocess._dtm import COVARIATE_PERIOD, COVARIATE_PROGRAMME
from ..topic_model import (
    Diagnostics,
    StmModel,
    load_model,
    save_model,
    select_k,
    topic_top_words,
)
from ..topic_model import fit as fit_topic_model
from ._config import LAYERS, PipelineConfig, stage_seed
from ._report import write_report

log = logging.getLogger(__name__)

__all__ = ["Pipeline"]

#: Stages executed by :meth:`.Pipeline.run`, in order.
RUN_STAGES = ("ingest", "filter", "preprocess", "fit", "network", "gap", "report")

#: All stages, including the optional model selection stage.
STAGES = ("ingest", "filter", "preprocess", "fit", "diagnose", "network", "gap", "report")

_STAGE_RECORD = "stage.json"
_MANIFEST = "manifest.json"
_CONFIG = "config.json"

_UPSTREAM: Dict[str, Tuple[str, ...]] = {
    "ingest": (),
    "filter": ("ingest",),
    "preprocess": ("filter",),
    "fit": ("preprocess",),
    "diagnose": ("preprocess",),
    "network": ("filter", "fit"),
    "gap": ("fit",),
    "report": ("preprocess", "fit", "network", "gap"),
}

# key artifacts of each stage, listed when a downstream stage finds them missing
_KEY_ARTIFACTS: Dict[str, Tuple[str, ...]] = {
    "ingest": tuple(f"ingest/{layer}.jsonl" for layer in LAYERS),
    "filter": tuple(f"filter/{layer}.jsonl" for layer in LAYERS),
    "preprocess": tuple(f"preprocess/{layer}/dtm/counts.txt" for layer in LAYERS),
    "fit": tuple(f"fit/{layer}/model.json" for layer in LAYERS),
    "diagnose": tuple(f"diagnose/{layer}/diagnostics.csv" for layer in LAYERS),
    "network": tuple(f"network/{layer}/summary.json" for layer in LAYERS),
    "gap": ("gap/report.json",),
    "report": ("report/report.md",),
}

_LABEL_PREFIX = {"research": "R", "projects": "P"}

__tracker = AllTracker(globals())


class Pipeline:
    """
    Runs the stages of the analysis on the artifacts of one output directory.

    Every stage reads its inputs from the serialized artifacts of its upstream
    stages, so each stage can be rerun on its own.
    After each stage, the manifest is rewritten; if a stage fails, its partial
    artifacts are kept and the manifest is marked ``FAILED``.
    """

    def __init__(self, config: PipelineConfig) -> None:
        """
        :param config: the validated configuration
        """
        self.config = config
        self.output_dir = config.output_dir
        self.config_hash = config.config_hash

    # public stage API

    def run(self) -> Path:
        """
        Run all stages from ingest to report.

        :return: the output directory
        """
        for stage in RUN_STAGES:
            self.run_stage(stage)
        return self.output_dir

    def run_stage(self, stage: str) -> Any:
        """
        Run one stage, after checking that its upstream artifacts exist and match
        the configuration.

        :param stage: the stage name
        :return: the value returned by the stage, if any
        :raise ConfigurationError: upstream artifacts are missing or stale
        """
        if stage not in STAGES:
            raise ValueError(f"arg stage must be one of {', '.join(STAGES)} but is {stage!r}")
        self.check_upstream(stage)

        stage_dir = self.output_dir / stage
        if stage_dir.exists():
            shutil.rmtree(stage_dir)
        stage_dir.mkdir(parents=True)
        self._write_config()

        log.info(f"stage {stage}: started")
        try:
            result = self._STAGE_FUNCTIONS[stage](self)
        except Exception:
            log.error(f"stage {stage}: failed")
            self.write_manifest(failed_stage=stage)
            raise
        self._write_json(
            stage_dir / _STAGE_RECORD,
            {"stage": stage, "config_hash": self.config_hash, "seed": self._seed(stage)},
        )
        self.write_manifest()
        log.info(f"stage {stage}: done")
        return result

    def check_upstream(self, stage: str) -> None:
        """
        Check the upstream artifacts of a stage.

        :param stage: the stage name
        :raise ConfigurationError: an upstream stage has not run, or ran with a
            different configuration
        """
        missing: List[str] = []
        for upstream in _UPSTREAM[stage]:
            record_path = self.output_dir / upstream / _STAGE_RECORD
            if not record_path.is_file():
                missing += [f"{upstream}/{_STAGE_RECORD}", *_KEY_ARTIFACTS[upstream]]
                continue
            record = json.loads(record_path.read_text(encoding="utf-8"))
            if record.get("config_hash") != self.config_hash:
                raise ConfigurationError(
                    f"stage {stage} refuses stale artifacts: stage {upstream} ran with "
                    f"configuration {record.get('config_hash')} but the current "
                    f"configuration is {self.config_hash}; rerun stage {upstream}"
                )
            missing += [
                artifact
                for artifact in _KEY_ARTIFACTS[upstream]
                if not (self.output_dir / artifact).is_file()
            ]
        if missing:
            raise ConfigurationError(
                f"stage {stage} requires missing artifacts: {', '.join(missing)}"
            )

    def write_manifest(self, failed_stage: Optional[str] = None) -> None:
        """
        List every artifact of the output directory with its SHA-256 checksum.

        :param failed_stage: the stage that failed, if any
        """
        artifacts = [
            {
                "path": path.relative_to(self.output_dir).as_posix(),
                "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
                "bytes": path.stat().st_size,
            }
            for path in sorted(
                self.output_dir.rglob("*"),
                key=lambda p: p.relative_to(self.output_dir).as_posix(),
            )
            if path.is_file() and path.relative_to(self.output_dir).as_posix() != _MANIFEST
        ]
        stages = {
            stage: "OK"
            for stage in STAGES
            if (self.output_dir / stage / _STAGE_RECORD).is_file()
        }
        if failed_stage is not None:
            stages[failed_stage] = "FAILED"
        self._write_json(
            self.output_dir / _MANIFEST,
            {
                "config_hash": self.config_hash,
                "status": "OK" if failed_stage is None else "FAILED",
                "failed_stage": failed_stage,
                "stages": stages,
                "artifacts": artifacts,
            },
        )

    # stages

    def ingest(self) -> None:
        """
        Read both input files into corpus layers.
        """
        summary: Dict[str, Any] = {}
        for name in LAYERS:
            parse = parse_bibliographic if name == "research" else parse_projects
            layer = parse(self.config.input_path(name), self.config.layer(name).mapping)
            # record the input as configured, not as resolved on this machine
            layer = replace(
                layer, provenance=replace(layer.provenance, source=self.config.layer(name).path)
            )
            layer.save(self._path("ingest", f"{name}.jsonl"))
            report = layer.report
            pd.DataFrame(
                [(s.row, s.reason, s.raw) for s in (report.skipped if report else ())],
                columns=["row", "reason", "raw"],
            ).to_csv(self._path("ingest", f"{name}_skipped.csv"), index=False, lineterminator="\n")
            summary[name] = {
                "n_rows": report.n_rows if report else len(layer),
                "n_kept": len(layer),
                "skipped": _reason_counts(report.skipped if report else ()),
            }
            log.info(f"ingested {len(layer)} {name} documents")
        self._write_json(self._path("ingest", "summary.json"), summary)

    def filter(self) -> None:
        """
        Filter both layers with the configured query.
        """
        query = parse_query(self.config.query) if self.config.query is not None else None
        summary: Dict[str, Any] = {}
        for name in LAYERS:
            layer = CorpusLayer.load(self._path("ingest", f"{name}.jsonl"))
            kept = filter_layer(layer, query) if query is not None else layer
            kept.save(self._path("filter", f"{name}.jsonl"))
            summary[name] = {
                "n_before": len(layer),
                "n_after": len(kept),
                "programmes": kept.programme_counts(),
            }
        self._path("filter", "query.txt").write_text(
            (serialize_query(query) if query is not None else "") + "\n", encoding="utf-8"
        )
        self._write_json(self._path("filter", "summary.json"), summary)

    def preprocess(self) -> None:
        """
        Tokenize both layers, build their vocabularies and document-term matrices,
        and compute lexical diversity by period.
        """
        config = self.config
        for name in LAYERS:
            layer = CorpusLayer.load(self._path("filter", f"{name}.jsonl"))
            tokens = tokenize_layer(layer, config.tokenizer, n_jobs=config.threads)
            vocabulary = build_vocabulary(
                layer, config.vocabulary, tokenizer=config.tokenizer, tokens=tokens
            )
            dtm = vectorize(
                layer,
                vocabulary,
                config.layer(name).covariates,
                tokenizer=config.tokenizer,
                periods=config.periods,
                min_tokens=config.min_tokens,
                tokens=tokens,
            )
            dtm.save(self._path("preprocess", name, "dtm"))
            log.info(
                f"{name}: {dtm.n_documents} documents, {dtm.n_terms} terms, "
                f"{len(dtm.dropped)} dropped"
            )
            _write_csv(
                lexical_diversity(layer, config.periods, config.tokenizer, tokens=tokens),
                self._path("preprocess", name, "lexical_diversity.csv"),
            )
            _write_csv(
                term_frequencies_by_period(
                    layer, config.periods, tokenizer=config.tokenizer, tokens=tokens
                ),
                self._path("preprocess", name, "term_frequencies.csv"),
            )

    def fit(self) -> None:
        """
        Fit a topic model to each layer.
        """
        for name in LAYERS:
            k = self._k(name)
            dtm = DocTermMatrix.load(self._path("preprocess", name, "dtm"))
            model = fit_topic_model(
                dtm,
                k,
                self.config.fit,
                stage_seed(self.config.seed, f"fit/{name}"),
                n_jobs=self.config.threads,
            )
            if not model.converged:
                log.warning(
                    f"{name}: fit did not converge within {model.n_iterations} iterations"
                )
            save_model(model, self._path("fit", name))

    def diagnose(self) -> Dict[str, Diagnostics]:
        """
        Compare the numbers of topics of the configured grid on each layer.

        :return: the diagnostics of each layer
        """
        if not self.config.k_grid:
            raise ConfigurationError("stage diagnose requires a k_grid (flag --k-grid)")
        results: Dict[str, Diagnostics] = {}
        for name in LAYERS:
            dtm = DocTermMatrix.load(self._path("preprocess", name, "dtm"))
            diagnostics = select_k(
                dtm,
                self.config.k_grid,
                self.config.fit,
                stage_seed(self.config.seed, f"diagnose/{name}"),
                n_jobs=self.config.threads,
            )
            diagnostics.to_csv(self._path("diagnose", name, "diagnostics.csv"))
            results[name] = diagnostics
        return results

    def network(self) -> None:
        """
        Build the topic correlation network of each layer, and the prevalence of
        its topics by the first categorical covariate.
        """
        threshold = self.config.network.threshold
        for name in LAYERS:
            model = load_model(self._path("fit", name))
            labels = _topic_labels(name, model.n_topics)
            graph = correlation_graph(model.theta, threshold, labels)
            write_graph(graph, self._path("network", name), prevalence=model.prevalence())
            _write_csv(
                pd.DataFrame(
                    sigma_correlation(model.sigma),
                    index=pd.Index(labels[:-1], name="topic"),
                    columns=labels[:-1],
                ),
                self._path("network", name, "sigma_correlation.csv"),
                index=True,
            )

            categorical = self.config.layer(name).covariates.categorical
            if categorical:
                layer = CorpusLayer.load(self._path("filter", f"{name}.jsonl"))
                levels, order = self._covariate_levels(layer, model, categorical[0])
                table = prevalence_by_covariate(model.theta, levels, order)
                table.to_frame(labels).to_csv(
                    self._path("network", name, "prevalence.csv"),
                    float_format="%.6g",
                    lineterminator="\n",
                )

            g_density = density(graph)
            log.info(f"{name}: {graph.n_edges} edges, density {g_density:.6g}")
            self._write_json(
                self._path("network", name, "summary.json"),
                {
                    "threshold": threshold,
                    "n_nodes": graph.n_nodes,
                    "n_edges": graph.n_edges,
                    "density": _round(g_density),
                },
            )

    def gap(self) -> None:
        """
        Compare the topics of both layers, and rank the least connected topics.
        """
        research = load_model(self._path("fit", "research"))
        projects = load_model(self._path("fit", "projects"))
        union = align_vocabularies(research.vocabulary, projects.vocabulary)
        labels_r = _topic_labels("research", research.n_topics)
        labels_p = _topic_labels("projects", projects.n_topics)

        matrix = cross_layer_matrix(
            research.beta,
            projects.beta,
            union,
            self.config.gap.top_m,
            labels_a=labels_r,
            labels_b=labels_p,
            n_jobs=self.config.threads,
        )
        matrix.save(self._path("gap"))

        report = gap_report(
            matrix,
            self.config.gap.n,
            topic_top_words(research.beta, research.vocabulary),
            topic_top_words(projects.beta, projects.vocabulary),
        )
        report.save(
            self._path("gap", "report.json"),
            header={
                "config_hash": self.config_hash,
                "options_hash": union.options_hash,
                "top_m": self.config.gap.top_m,
                "n": self.config.gap.n,
            },
        )
        log.info(
            f"similarities range from {matrix.min:.6g} to {matrix.max:.6g}"
        )

        sums_r, sums_p = cumulative_similarity(matrix.values)
        _write_csv(
            pd.concat(
                [
                    _ranking("research", labels_r, sums_r),
                    _ranking("projects", labels_p, sums_p),
                ],
                ignore_index=True,
            ),
            self._path("gap", "rankings.csv"),
        )

    def report(self) -> Path:
        """
        Render the Markdown report and its CSV tables.

        :return: the path of the Markdown report
        """
        return write_report(self.output_dir, self._path("report"), self.config_hash)

    _STAGE_FUNCTIONS: Mapping[str, Callable[[Pipeline], Any]] = {
        "ingest": ingest,
        "filter": filter,
        "preprocess": preprocess,
        "fit": fit,
        "diagnose": diagnose,
        "network": network,
        "gap": gap,
        "report": report,
    }

    # helpers

    def _path(self, stage: str, *parts: str) -> Path:
        path = self.output_dir.joinpath(stage, *parts)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _seed(self, stage: str) -> Optional[Dict[str, int]]:
        if stage in ("fit", "diagnose"):
            return {name: stage_seed(self.config.seed, f"{stage}/{name}") for name in LAYERS}
        return None

    def _k(self, name: str) -> int:
        k = self.config.layer(name).k
        if k is None:
            raise ConfigurationError(f"stage fit requires the number of topics {name}.k")
        return k

    def _covariate_levels(
        self, layer: CorpusLayer, model: StmModel, covariate: str
    ) -> Tuple[List[str], Optional[List[str]]]:
        documents = {document.id: document for document in layer.documents}
        missing = [doc_id for doc_id in model.doc_ids if doc_id not in documents]
        if missing:
            raise DataError(
                f"fitted documents not found in the filtered layer: {', '.join(missing[:5])}"
            )
        fitted = [documents[doc_id] for doc_id in model.doc_ids]

        if covariate == COVARIATE_PROGRAMME:
            return (
                [document.programme.value if document.programme else "" for document in fitted],
                [programme.value for programme in Programme],
            )
        if covariate == COVARIATE_PERIOD:
            periods = self.config.periods
            labels = []
            for document in fitted:
                period = periods.period_of(document.year)
                if period is None:
                    raise DataError(
                        f"year {document.year} of document {document.id} is outside all periods"
                    )
                labels.append(period.label)
            return labels, periods.labels
        return [str(document.extra.get(covariate, "")) for document in fitted], None

    def _write_config(self) -> None:
        self._write_json(self.output_dir / _CONFIG, self.config.to_dict())

    @staticmethod
    def _write_json(path: Path, data: Any) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(data, indent=1, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


__tracker.validate()


def _write_csv(frame: pd.DataFrame, path: Path, index: bool = False) -> None:
    frame.to_csv(path, index=index, float_format="%.6g", lineterminator="\n")


def _round(value: float) -> float:
    # 6 significant digits, as in all text outputs
    return float(f"{value:.6g}")


def _topic_labels(layer: str, n_topics: int) -> List[str]:
    return [f"{_LABEL_PREFIX[layer]}{k}" for k in range(1, n_topics + 1)]


def _reason_counts(skipped: Sequence[Any]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for row in skipped:
        counts[row.reason] = counts.get(row.reason, 0) + 1
    return dict(sorted(counts.items()))


def _ranking(layer: str, labels: Sequence[str], sums: np.ndarray) -> pd.DataFrame:
    order = sorted(range(len(labels)), key=lambda i: (sums[i], i))
    rank = np.empty(len(labels), dtype=int)
    rank[order] = np.arange(1, len(labels) + 1)
    return pd.DataFrame(
        {
            "layer": layer,
            "label": list(labels),
            "cumulative_similarity": sums,
            "rank": rank,
        }
    )

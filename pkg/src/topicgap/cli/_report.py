"""
Rendering of the human-readable pipeline report.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd

from ..api import AllTracker
from ..text import format_markdown_table
from ._config import LAYERS

log = logging.getLogger(__name__)

__all__ = ["report_tables", "render_report", "write_report"]

#: Number of top words shown per topic in the Markdown report.
N_SHOWN_WORDS = 8

__tracker = AllTracker(globals())


def report_tables(output_dir: Path) -> Dict[str, pd.DataFrame]:
    """
    Collect the report tables from the artifacts of stages ``preprocess``,
    ``fit``, ``network`` and ``gap``.

    :param output_dir: the pipeline output directory
    :return: tables ``lexical_diversity``, ``topics``, ``densities``,
        ``centrality``, ``gaps`` and ``gap_rankings``, each with a leading
        ``layer`` column
    """
    tables: Dict[str, pd.DataFrame] = {
        "lexical_diversity": _stack(output_dir, "preprocess/{}/lexical_diversity.csv"),
        "topics": _stack(output_dir, "fit/{}/topics.csv"),
        "densities": pd.DataFrame(
            [
                {"layer": layer, **_read_json(output_dir / "network" / layer / "summary.json")}
                for layer in LAYERS
            ],
            columns=["layer", "threshold", "n_nodes", "n_edges", "density"],
        ),
        "centrality": _stack(output_dir, "network/{}/nodes.csv"),
        "gap_rankings": pd.read_csv(output_dir / "gap" / "rankings.csv"),
    }

    gap = _read_json(output_dir / "gap" / "report.json")
    tables["gaps"] = pd.DataFrame(
        [
            {
                "layer": layer,
                "label": entry["label"],
                "cumulative_similarity": entry["cumulative_similarity"],
                "best_match": entry["best_match"],
                "best_similarity": entry["best_similarity"],
                "top_words": " ".join(entry["top_words"]),
            }
            for layer, key in zip(LAYERS, ("gaps_a", "gaps_b"))
            for entry in gap[key]
        ],
        columns=[
            "layer",
            "label",
            "cumulative_similarity",
            "best_match",
            "best_similarity",
            "top_words",
        ],
    )
    tables["similarity_range"] = pd.DataFrame(
        [{"min_similarity": gap["min_similarity"], "max_similarity": gap["max_similarity"]}]
    )
    return tables


def render_report(tables: Dict[str, pd.DataFrame], config_hash: str) -> str:
    """
    Render the report tables as a Markdown document.

    :param tables: the tables returned by :func:`.report_tables`
    :param config_hash: the hash of the configuration, stated in the header
    :return: the Markdown text
    """
    topics = tables["topics"].copy()
    topics["top_words"] = [
        " ".join(str(words).split()[:N_SHOWN_WORDS]) for words in topics["top_words"]
    ]
    centrality = tables["centrality"][
        ["layer", "label", "degree", "weighted_degree", "prevalence", "rank"]
    ]
    similarity = tables["similarity_range"].iloc[0]

    sections: List[str] = [
        "# Research and projects topic gap report",
        f"Configuration `{config_hash}`.",
        "## Lexical diversity by period",
        _table(tables["lexical_diversity"], ">", first_left=3),
        "## Topics",
        _table(topics, ">", first_left=1, last_left=True),
        "## Topic networks",
        _table(tables["densities"], ">", first_left=1),
        "### Centrality",
        _table(centrality, ">", first_left=2),
        "## Gap analysis",
        (
            f"Cross-layer similarities range from {similarity['min_similarity']:.6g} "
            f"to {similarity['max_similarity']:.6g}."
        ),
        "### Least connected topics",
        _table(tables["gaps"], ">", first_left=2, last_left=True),
        "### Cumulative similarity rankings",
        _table(tables["gap_rankings"], ">", first_left=2),
    ]
    return "\n\n".join(section.rstrip("\n") for section in sections) + "\n"


def write_report(output_dir: Path, report_dir: Path, config_hash: str) -> Path:
    """
    Write the Markdown report ``report.md`` and each of its tables as CSV.

    :param output_dir: the pipeline output directory
    :param report_dir: the directory to write the report to
    :param config_hash: the hash of the configuration
    :return: the path of the Markdown report
    """
    report_dir.mkdir(parents=True, exist_ok=True)
    tables = report_tables(output_dir)
    for name, table in sorted(tables.items()):
        table.to_csv(
            report_dir / f"{name}.csv", index=False, float_format="%.6g", lineterminator="\n"
        )
    path = report_dir / "report.md"
    path.write_text(render_report(tables, config_hash), encoding="utf-8")
    log.info(f"wrote report to {path}")
    return path


__tracker.validate()


def _stack(output_dir: Path, pattern: str) -> pd.DataFrame:
    frames = []
    for layer in LAYERS:
        frame = pd.read_csv(output_dir / pattern.format(layer))
        frame.insert(0, "layer", layer)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def _read_json(path: Path) -> Dict[str, Any]:
    data: Dict[str, Any] = json.loads(path.read_text(encoding="utf-8"))
    return data


def _table(
    frame: pd.DataFrame, align: str, first_left: int = 1, last_left: bool = False
) -> str:
    # left-align the leading label columns (and a trailing text column), numbers right
    n_columns = frame.shape[1]
    alignment = ["<" if i < first_left else align for i in range(n_columns)]
    if last_left:
        alignment[-1] = "<"
    return format_markdown_table(list(frame.columns), frame, alignment)

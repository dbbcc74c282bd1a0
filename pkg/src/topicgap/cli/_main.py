"""
The ``topicgap`` command line interface.
"""
import argparse
import logging
import sys
from typing import List, Optional, Sequence, Tuple

from ..api import AllTracker, TopicGapError
from ..text import format_table
from ._config import PipelineConfig, resolve_config_path
from ._pipeline import STAGES, Pipeline

log = logging.getLogger(__name__)

__all__ = ["main", "make_parser"]

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

__tracker = AllTracker(globals())


def make_parser() -> argparse.ArgumentParser:
    """
    :return: the argument parser of the ``topicgap`` command
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        help="path of the JSON configuration (default: $TOPICGAP_CONFIG)",
    )
    common.add_argument("--seed", type=int, help="master seed (overrides config key seed)")
    common.add_argument(
        "--threads", type=_positive_int, help="maximum worker threads (overrides threads)"
    )
    common.add_argument("--out", help="output directory (overrides config key output)")
    common.add_argument(
        "--log-level", default="INFO", choices=_LOG_LEVELS, help="log level (default: INFO)"
    )

    parser = argparse.ArgumentParser(
        prog="topicgap",
        description=(
            "Compare the topics of research abstracts and funded projects: ingest, "
            "filter, fit topic models, build topic networks and rank the gaps."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    run = commands.add_parser(
        "run", parents=[common], help="run all stages from ingest to report"
    )
    run.add_argument("--query", help="boolean filter query (overrides config key query)")

    help_texts = {
        "ingest": "read the input files",
        "filter": "filter both layers with the query",
        "preprocess": "tokenize and build the document-term matrices",
        "fit": "fit a topic model per layer",
        "diagnose": "compare numbers of topics on held-out data",
        "network": "build the topic correlation networks",
        "gap": "compare the topics of both layers",
        "report": "render the Markdown report and its tables",
    }
    for stage in STAGES:
        sub = commands.add_parser(stage, parents=[common], help=help_texts[stage])
        if stage == "filter":
            sub.add_argument("--query", help="boolean filter query (overrides query)")
        if stage == "diagnose":
            sub.add_argument(
                "--k-grid",
                type=_k_grid,
                help="comma-separated numbers of topics, e.g. 5,10,20 (overrides k_grid)",
            )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the ``topicgap`` command.

    :param argv: the command line arguments (default: ``sys.argv[1:]``)
    :return: the exit code: 0 on success, 2 for configuration errors, 3 for data
        errors, 4 for numerical failures
    """
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = PipelineConfig.from_json(resolve_config_path(args.config)).with_overrides(
            seed=args.seed,
            threads=args.threads,
            output=args.out,
            query=getattr(args, "query", None),
            k_grid=getattr(args, "k_grid", None),
        )
        config.validate()
        pipeline = Pipeline(config)

        if args.command == "run":
            print(pipeline.run())
        elif args.command == "diagnose":
            for layer, diagnostics in pipeline.run_stage("diagnose").items():
                table = diagnostics.table.reset_index()
                print(f"{layer}:")
                print(
                    format_table(
                        list(table.columns),
                        table,
                        alignment=[">"] * (table.shape[1] - 1) + ["<"],
                    )
                )
        else:
            result = pipeline.run_stage(args.command)
            if result is not None:
                print(result)
    except TopicGapError as e:
        log.error(str(e))
        return e.exit_code
    return 0


__tracker.validate()


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {value!r}")
    return number


def _k_grid(value: str) -> Tuple[int, ...]:
    try:
        grid: List[int] = [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers but got {value!r}"
        ) from None
    if not grid:
        raise argparse.ArgumentTypeError("expected at least one number of topics")
    return tuple(grid)

"""
Test cases for the `topicgap.cli` module
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict

import pandas as pd
import pytest

from test.paths import PATH_CONFIG
from topicgap.api import ConfigurationError, DataError
from topicgap.cli import Pipeline, PipelineConfig, main, make_parser
from topicgap.cli._config import ENV_CONFIG, LAYERS, resolve_config_path, stage_seed
from topicgap.cli._pipeline import RUN_STAGES

log = logging.getLogger(__name__)


@pytest.fixture(scope="module")  # type:ignore
def run_dir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    out = tmp_path_factory.mktemp("run") / "out"
    assert main(["run", "--config", str(PATH_CONFIG), "--out", str(out)]) == 0
    return out


def test_config_from_json() -> None:
    config = PipelineConfig.from_json(PATH_CONFIG)
    assert config.research.k == 3
    assert config.projects.k == 2
    assert config.k_grid == (2, 3)
    assert config.seed == 42
    assert config.threads == 1
    assert config.input_path("research") == PATH_CONFIG.parent / "research.csv"
    assert config.output_dir == PATH_CONFIG.parent / "out"
    config.validate()

    with pytest.raises(ConfigurationError, match="configuration file not found"):
        PipelineConfig.from_json(PATH_CONFIG.parent / "missing.json")


def test_config_errors(tmp_path: Path) -> None:
    data = _config_data()
    data["colour"] = "blue"
    with pytest.raises(ConfigurationError, match="unknown keys in config: colour"):
        PipelineConfig.from_dict(data)

    (tmp_path / "broken.json").write_text("{", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="is not valid JSON"):
        PipelineConfig.from_json(tmp_path / "broken.json")

    with pytest.raises(ConfigurationError, match="input files not found"):
        PipelineConfig.from_dict(_config_data(), base_dir=tmp_path).validate()

    data = _config_data()
    data["gap"] = {"n": 3}
    with pytest.raises(ConfigurationError, match="gap.n must not exceed"):
        PipelineConfig.from_dict(data, base_dir=PATH_CONFIG.parent).validate()


def test_config_overrides(tmp_path: Path) -> None:
    config = PipelineConfig.from_json(PATH_CONFIG)
    assert config.with_overrides() is config

    overridden = config.with_overrides(
        seed=7, threads=4, output=tmp_path, query="wind", k_grid=(4, 5)
    )
    assert overridden.seed == 7
    assert overridden.threads == 4
    assert overridden.output_dir == tmp_path
    assert overridden.query == "wind"
    assert overridden.k_grid == (4, 5)

    # neither threads nor the output directory change the results
    assert config.with_overrides(threads=8, output=tmp_path).config_hash == config.config_hash
    assert config.with_overrides(seed=7).config_hash != config.config_hash
    assert "threads" not in config.to_dict()
    assert "output" not in config.to_dict()


def test_stage_seed() -> None:
    assert stage_seed(42, "fit/research") == stage_seed(42, "fit/research")
    assert stage_seed(42, "fit/research") != stage_seed(42, "fit/projects")
    assert stage_seed(42, "fit/research") != stage_seed(43, "fit/research")
    for stage in ["ingest", "fit/research", "diagnose/projects"]:
        assert 0 <= stage_seed(0, stage) < 2**32


def test_resolve_config_path(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(ENV_CONFIG, raising=False)
    with pytest.raises(ConfigurationError, match="no configuration given"):
        resolve_config_path(None)
    assert resolve_config_path("a.json") == Path("a.json")

    monkeypatch.setenv(ENV_CONFIG, str(PATH_CONFIG))
    assert resolve_config_path(None) == PATH_CONFIG
    # the flag takes precedence over the variable
    assert resolve_config_path("a.json") == Path("a.json")


def test_parser() -> None:
    parser = make_parser()
    args = parser.parse_args(["diagnose", "--config", "c.json", "--k-grid", "2,3,5"])
    assert args.command == "diagnose"
    assert args.k_grid == (2, 3, 5)
    assert args.log_level == "INFO"

    for argv in [
        ["run", "--threads", "0"],
        ["diagnose", "--k-grid", "two"],
        ["gap", "--query", "wind"],
        [],
    ]:
        with pytest.raises(SystemExit):
            parser.parse_args(argv)


def test_missing_input(tmp_path: Path) -> None:
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(_config_data()), encoding="utf-8")
    out = tmp_path / "out"

    assert main(["run", "--config", str(config_path), "--out", str(out)]) == 2
    assert not out.exists()


def test_no_config(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(ENV_CONFIG, raising=False)
    assert main(["ingest"]) == 2


def test_empty_input(tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
    empty = tmp_path / "research.csv"
    empty.write_bytes(b"")
    data = _config_data()
    data["research"]["path"] = str(empty)
    data["projects"]["path"] = str(PATH_CONFIG.parent / "projects.csv")
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(data), encoding="utf-8")

    with caplog.at_level(logging.ERROR):
        code = main(["ingest", "--config", str(config_path), "--out", str(tmp_path / "out")])
    assert code == 3
    assert "is empty" in caplog.text


def test_run(run_dir: Path) -> None:
    manifest = _manifest(run_dir)
    assert manifest["status"] == "OK"
    assert manifest["failed_stage"] is None
    assert manifest["stages"] == {stage: "OK" for stage in RUN_STAGES}

    artifacts = {artifact["path"] for artifact in manifest["artifacts"]}
    for path in [
        "config.json",
        "ingest/research.jsonl",
        "filter/query.txt",
        "fit/research/model.json",
        "fit/projects/model.json",
        "network/projects/nodes.csv",
        "gap/report.json",
        "gap/rankings.csv",
        "report/report.md",
    ]:
        assert path in artifacts
    assert "manifest.json" not in artifacts
    for artifact in manifest["artifacts"]:
        assert (run_dir / artifact["path"]).stat().st_size == artifact["bytes"]

    for stage in RUN_STAGES:
        record = json.loads((run_dir / stage / "stage.json").read_text(encoding="utf-8"))
        assert record["stage"] == stage
        assert record["config_hash"] == manifest["config_hash"]

    report = (run_dir / "report" / "report.md").read_text(encoding="utf-8")
    assert report.startswith("# Research and projects topic gap report")

    gaps = json.loads((run_dir / "gap" / "report.json").read_text(encoding="utf-8"))
    assert gaps["header"]["n"] == 2
    assert len(gaps["gaps_a"]) == len(gaps["gaps_b"]) == 2
    assert all(gap["label"].startswith("R") for gap in gaps["gaps_a"])
    assert all(gap["label"].startswith("P") for gap in gaps["gaps_b"])

    rankings = pd.read_csv(run_dir / "gap" / "rankings.csv")
    assert len(rankings) == 3 + 2


def test_run_is_reproducible(run_dir: Path, tmp_path: Path) -> None:
    again = tmp_path / "again"
    threaded = tmp_path / "threaded"
    assert main(["run", "--config", str(PATH_CONFIG), "--out", str(again)]) == 0
    assert (
        main(
            ["run", "--config", str(PATH_CONFIG), "--out", str(threaded), "--threads", "8"]
        )
        == 0
    )

    expected = (run_dir / "manifest.json").read_bytes()
    assert (again / "manifest.json").read_bytes() == expected
    assert (threaded / "manifest.json").read_bytes() == expected


def test_stale_and_missing_artifacts(
    run_dir: Path, tmp_path: Path, caplog: pytest.LogCaptureFixture
) -> None:
    with caplog.at_level(logging.ERROR):
        code = main(
            ["gap", "--config", str(PATH_CONFIG), "--out", str(run_dir), "--seed", "7"]
        )
    assert code == 2
    assert "refuses stale artifacts" in caplog.text
    # the refused stage leaves the artifacts untouched
    assert _manifest(run_dir)["status"] == "OK"

    caplog.clear()
    empty = tmp_path / "empty"
    with caplog.at_level(logging.ERROR):
        assert main(["gap", "--config", str(PATH_CONFIG), "--out", str(empty)]) == 2
    assert "requires missing artifacts" in caplog.text
    assert "fit/research/model.json" in caplog.text


def test_diagnose(run_dir: Path, tmp_path: Path) -> None:
    out = tmp_path / "out"
    for stage in ["ingest", "filter", "preprocess"]:
        assert main([stage, "--config", str(PATH_CONFIG), "--out", str(out)]) == 0
    assert (
        main(["diagnose", "--config", str(PATH_CONFIG), "--out", str(out), "--k-grid", "2,3"])
        == 0
    )

    for layer in LAYERS:
        diagnostics = pd.read_csv(out / "diagnose" / layer / "diagnostics.csv")
        assert diagnostics["k"].tolist() == [2, 3]

    manifest = _manifest(out)
    assert manifest["stages"] == {
        stage: "OK" for stage in ["ingest", "filter", "preprocess", "diagnose"]
    }
    # stages shared with a full run produce identical artifacts
    shared = {
        artifact["path"]: artifact["sha256"]
        for artifact in _manifest(run_dir)["artifacts"]
        if artifact["path"].startswith("preprocess/")
    }
    assert shared
    assert {
        artifact["path"]: artifact["sha256"]
        for artifact in manifest["artifacts"]
        if artifact["path"].startswith("preprocess/")
    } == shared


def test_failed_stage(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    def _fail(pipeline: Pipeline) -> None:
        raise DataError("no documents left")

    monkeypatch.setitem(Pipeline._STAGE_FUNCTIONS, "filter", _fail)  # type: ignore

    out = tmp_path / "out"
    assert main(["ingest", "--config", str(PATH_CONFIG), "--out", str(out)]) == 0
    assert main(["filter", "--config", str(PATH_CONFIG), "--out", str(out)]) == 3

    manifest = _manifest(out)
    assert manifest["status"] == "FAILED"
    assert manifest["failed_stage"] == "filter"
    assert manifest["stages"] == {"ingest": "OK", "filter": "FAILED"}
    assert not (out / "filter" / "stage.json").exists()


def _manifest(out: Path) -> Dict[str, Any]:
    manifest: Dict[str, Any] = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    return manifest


def _config_data() -> Dict[str, Any]:
    data: Dict[str, Any] = json.loads(PATH_CONFIG.read_text(encoding="utf-8"))
    return data

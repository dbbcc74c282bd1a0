"""
Tests for ingestion and filtering of corpus layers.
"""
import logging
from pathlib import Path
from typing import List

import numpy as np
import pytest

from test.paths import MAPPING_PROJECTS, MAPPING_RESEARCH, PATH_EXAMPLE_QUERY
from topicgap.api import ConfigurationError, DataError
from topicgap.corpus import (
    And,
    CorpusLayer,
    Document,
    Layer,
    Not,
    Or,
    Phrase,
    Prefix,
    Programme,
    QueryAst,
    QueryParseError,
    Term,
    detect_delimiter,
    filter_layer,
    match_query,
    normalize_programme,
    parse_bibliographic,
    parse_projects,
    parse_query,
    parse_year,
    serialize_query,
)

log = logging.getLogger(__name__)

_WORDS = ["alpha", "beta", "gamma", "delta", "eps"]


def test_ingest_research(research: CorpusLayer) -> None:
    assert research.layer is Layer.Research
    assert len(research) == 17
    assert research.report is not None
    assert research.report.n_rows == 18
    assert research.report.count(CorpusLayer.REASON_EMPTY_ABSTRACT) == 1
    assert "2-s2.0-0005" not in research.ids

    years = [document.year for document in research]
    assert min(years) == 1979
    assert max(years) == 2021

    first = research.documents[0]
    assert first.id == "2-s2.0-0001"
    assert first.title == "Rainfall variability and crop yield"
    assert first.programme is None
    assert first.extra == {"Source title": "Agricultural Systems"}
    assert len(research.provenance.source_sha256) == 64


def test_ingest_projects(projects: CorpusLayer, caplog: pytest.LogCaptureFixture) -> None:
    assert projects.layer is Layer.Projects
    assert len(projects) == 9
    assert projects.programme_counts() == {"FP6": 2, "FP7": 3, "H2020": 4}
    assert projects.report is not None
    (skipped,) = projects.report.skipped
    assert skipped.reason == CorpusLayer.REASON_UNKNOWN_PROGRAMME
    assert skipped.raw == "FP5"
    assert skipped.row == 9

    # start dates are reduced to years
    assert projects.documents[0].year == 2004
    assert projects.documents[0].abstract.startswith("Develop irrigation tools")

    from test.paths import PATH_PROJECTS

    with caplog.at_level(logging.WARNING):
        parse_projects(PATH_PROJECTS, MAPPING_PROJECTS)
    assert any("FP5" in record.getMessage() for record in caplog.records)


def test_ingest_small_files(tmp_path: Path) -> None:
    path = tmp_path / "three.csv"
    path.write_text(
        "Title,Abstract,Year\n"
        "First,Some text on floods.,2001\n"
        "Second,   ,2002\n"
        'Third,"Text, with a comma.",2003.0\n',
        encoding="utf-8",
    )
    layer = parse_bibliographic(path, {"title": "Title", "abstract": "Abstract", "year": "Year"})
    assert len(layer) == 2
    assert layer.report is not None
    assert layer.report.count(CorpusLayer.REASON_EMPTY_ABSTRACT) == 1
    # without an id column, ids are generated from row numbers
    assert layer.ids == ["R000001", "R000003"]
    assert layer.documents[1].abstract == "Text, with a comma."
    assert layer.documents[1].year == 2003

    bad_year = tmp_path / "bad_year.csv"
    bad_year.write_text(
        "Title;Abstract;Year\nA;Floods.;soon\nB;Droughts.;1999\nB2;Heat.;1850\n",
        encoding="utf-8",
    )
    layer = parse_bibliographic(
        bad_year, {"title": "Title", "abstract": "Abstract", "year": "Year"}
    )
    assert layer.ids == ["R000002"]
    assert layer.report is not None
    assert layer.report.count(CorpusLayer.REASON_INVALID_YEAR) == 2

    duplicates = tmp_path / "duplicates.csv"
    duplicates.write_text(
        "id,objective,programme,year\n"
        "1,Solar.,FP7,2010\n"
        "1,Wind.,FP7,2011\n"
        ",Heat.,FP7,2011\n",
        encoding="utf-8",
    )
    layer = parse_projects(
        duplicates,
        {"id": "id", "abstract": "objective", "programme": "programme", "year": "year"},
    )
    assert layer.ids == ["1"]
    assert layer.report is not None
    assert layer.report.count(CorpusLayer.REASON_DUPLICATE_ID) == 1
    assert layer.report.count(CorpusLayer.REASON_MISSING_ID) == 1


def test_ingest_errors(tmp_path: Path) -> None:
    from test.paths import PATH_RESEARCH

    with pytest.raises(ConfigurationError, match="'Summary'"):
        parse_bibliographic(PATH_RESEARCH, {**MAPPING_RESEARCH, "abstract": "Summary"})

    with pytest.raises(ConfigurationError, match="missing year"):
        parse_bibliographic(PATH_RESEARCH, {"title": "Title", "abstract": "Abstract"})

    with pytest.raises(ConfigurationError, match="unknown fields"):
        parse_bibliographic(PATH_RESEARCH, {**MAPPING_RESEARCH, "cost": "Cost"})

    with pytest.raises(ConfigurationError, match="not found"):
        parse_bibliographic(tmp_path / "absent.csv", MAPPING_RESEARCH)

    latin = tmp_path / "latin.csv"
    latin.write_bytes("Title,Abstract,Year\nA,Klimaänderung,2001\n".encode("latin-1"))
    with pytest.raises(DataError, match="UTF-8"):
        parse_bibliographic(latin, {"title": "Title", "abstract": "Abstract", "year": "Year"})

    empty = tmp_path / "empty.csv"
    empty.write_bytes(b"")
    with pytest.raises(DataError, match="is empty"):
        parse_bibliographic(empty, MAPPING_RESEARCH)

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("Title,Abstract,Year\nA,B,2001\nC,D,2002,extra,fields\n", encoding="utf-8")
    with pytest.raises(DataError, match="not a valid CSV file"):
        parse_bibliographic(ragged, {"title": "Title", "abstract": "Abstract", "year": "Year"})


def test_field_parsers() -> None:
    assert detect_delimiter("a;b;c") == ";"
    assert detect_delimiter("a,b,c") == ","
    assert detect_delimiter("title") == ","

    assert parse_year("2004") == 2004
    assert parse_year(" 1999.0 ") == 1999
    assert parse_year("2015-06-01") == 2015
    assert parse_year("2015-06-01T00:00:00") == 2015
    assert parse_year("1999.5") is None
    assert parse_year("soon") is None
    assert parse_year("1850") is None
    assert parse_year("") is None

    assert normalize_programme("FP7") is Programme.FP7
    assert normalize_programme("fp 6") is Programme.FP6
    assert normalize_programme("H2020") is Programme.H2020
    assert normalize_programme("h-2020") is Programme.H2020
    assert normalize_programme("Horizon 2020") is Programme.H2020
    assert normalize_programme("FP5") is None


def test_document_validation() -> None:
    with pytest.raises(DataError, match="empty abstract"):
        Document(id="x", title="", abstract=" ", year=2000, layer=Layer.Research)
    with pytest.raises(DataError, match="outside"):
        Document(id="x", title="", abstract="a", year=1800, layer=Layer.Research)
    with pytest.raises(DataError, match="programme"):
        Document(id="x", title="", abstract="a", year=2000, layer=Layer.Projects)
    with pytest.raises(DataError, match="programme"):
        Document(
            id="x",
            title="",
            abstract="a",
            year=2000,
            layer=Layer.Research,
            programme=Programme.FP7,
        )

    document = Document(
        id="p1",
        title="Wind",
        abstract="Turbines.",
        year=2010,
        layer=Layer.Projects,
        programme=Programme.FP7,
        extra={"z": "1", "a": "2"},
    )
    assert document.text == "Wind\nTurbines."
    assert Document.from_json(document.to_json()) == document
    assert document.to_json().startswith('{"id": "p1", "layer": "Projects"')


def test_layer_persistence(projects: CorpusLayer, tmp_path: Path) -> None:
    path = tmp_path / "projects.jsonl"
    projects.save(path)
    assert (tmp_path / "projects.meta.json").is_file()

    loaded = CorpusLayer.load(path)
    assert loaded == projects
    assert loaded.ids == projects.ids
    assert loaded.report is None

    # saving is deterministic
    text = path.read_bytes()
    loaded.save(path)
    assert path.read_bytes() == text

    with pytest.raises(DataError, match="duplicate"):
        CorpusLayer(
            layer=Layer.Projects,
            documents=(projects.documents[0], projects.documents[0]),
            provenance=projects.provenance,
        )


def test_parse_query() -> None:
    assert parse_query('"climate change" AND innovat*') == And(
        (Phrase(("climate", "change")), Prefix("innovat"))
    )
    assert parse_query("Climate") == Term("climate")
    assert parse_query('"Climate"') == Term("climate")
    assert parse_query("climate-smart") == Phrase(("climate", "smart"))

    # AND binds stronger than OR
    assert parse_query("a AND b OR c") == Or((And((Term("a"), Term("b"))), Term("c")))
    assert parse_query("a AND (b OR c)") == And((Term("a"), Or((Term("b"), Term("c")))))

    # nested conjunctions and disjunctions are flattened
    assert parse_query("a AND (b AND c)") == parse_query("(a AND b) AND c")
    assert parse_query("(a OR b) OR c") == Or((Term("a"), Term("b"), Term("c")))

    assert parse_query("energy AND NOT (coal OR oil)") == And(
        (Term("energy"), Not(Or((Term("coal"), Term("oil")))))
    )

    example = "\n".join(
        line
        for line in PATH_EXAMPLE_QUERY.read_text(encoding="utf-8").splitlines()
        if not line.startswith("#")
    )
    ast = parse_query(example)
    assert isinstance(ast, And)
    assert isinstance(ast.children[0], Or)
    assert ast.children[1] == Not(Phrase(("fossil", "fuel", "subsidies")))


def test_parse_query_errors() -> None:
    for text in ["", "   ", "climate AND", "(climate", "climate)", "OR climate", '""']:
        with pytest.raises(QueryParseError):
            parse_query(text)

    with pytest.raises(QueryParseError) as e:
        parse_query("NOT climate")
    assert e.value.offset == 0

    with pytest.raises(QueryParseError) as e:
        parse_query("climate OR NOT carbon")
    assert e.value.offset == 11
    assert e.value.text == "climate OR NOT carbon"

    # offsets count UTF-8 bytes
    with pytest.raises(QueryParseError) as e:
        parse_query("klimaänderung OR NOT carbon")
    assert e.value.offset == 18

    with pytest.raises(QueryParseError):
        parse_query("NOT a AND NOT b")
    with pytest.raises(QueryParseError):
        parse_query("a AND NOT NOT b")

    # query errors are configuration errors
    with pytest.raises(ConfigurationError):
        parse_query("a AND")


def test_match_query() -> None:
    q = parse_query('"climate change" AND innovat*')
    assert match_query(q, "Innovation policy and CLIMATE change")
    assert not match_query(q, "Change of climate and innovation")
    assert not match_query(q, "climate change adaptation")

    q = parse_query("energy AND NOT coal")
    assert match_query(q, "renewable energy")
    assert not match_query(q, "energy from coal")

    document = Document(
        id="x", title="Wind farms", abstract="Storage.", year=2010, layer=Layer.Research
    )
    assert match_query(parse_query("wind AND storage"), document)


def test_filter_layer(projects: CorpusLayer, caplog: pytest.LogCaptureFixture) -> None:
    q = parse_query("wind OR solar")
    filtered = filter_layer(projects, q)
    assert filtered.ids == ["12002", "20001", "30001", "30004"]
    assert filtered.provenance == projects.provenance
    # filtering is idempotent
    assert filter_layer(filtered, q) == filtered

    with caplog.at_level(logging.WARNING):
        empty = filter_layer(projects, parse_query("volcano"))
    assert len(empty) == 0
    assert any("matched no documents" in r.getMessage() for r in caplog.records)


def test_query_properties() -> None:
    rng = np.random.default_rng(42)
    asts = [_random_ast(rng, depth=3) for _ in range(500)]
    documents = [
        " ".join(rng.choice(_WORDS, size=int(rng.integers(0, 8))))
        for _ in range(200)
    ]

    for ast in asts:
        # serialization and parsing are inverse on canonical trees
        assert parse_query(serialize_query(ast)) == ast

    for a, b, c in zip(asts[0::3], asts[1::3], asts[2::3]):
        for d in documents:
            # De Morgan
            assert match_query(Not(And((a, b))), d) == match_query(
                Or((Not(a), Not(b))), d
            )
            assert match_query(Not(Or((a, b))), d) == match_query(
                And((Not(a), Not(b))), d
            )
            # distributivity
            assert match_query(And((a, Or((b, c)))), d) == match_query(
                Or((And((a, b)), And((a, c)))), d
            )
            assert match_query(Or((a, And((b, c)))), d) == match_query(
                And((Or((a, b)), Or((a, c)))), d
            )


def _random_ast(rng: np.random.Generator, depth: int) -> QueryAst:
    # random canonical tree: flattened, negations only inside conjunctions
    kind = rng.integers(0, 5) if depth > 0 else rng.integers(0, 3)
    if kind == 0:
        return Term(str(rng.choice(_WORDS)))
    elif kind == 1:
        return Phrase(tuple(str(w) for w in rng.choice(_WORDS, size=2)))
    elif kind == 2:
        return Prefix(str(rng.choice(_WORDS))[: int(rng.integers(1, 4))])
    elif kind == 3:
        children: List[QueryAst] = []
        for _ in range(int(rng.integers(2, 4))):
            child = _random_ast(rng, depth - 1)
            if isinstance(child, And):
                child = Or((child, Term("zeta")))
            if rng.random() < 0.3:
                child = Not(child)
            children.append(child)
        if all(isinstance(child, Not) for child in children):
            children.append(Term(str(rng.choice(_WORDS))))
        return And(tuple(children))
    else:
        options: List[QueryAst] = []
        for _ in range(int(rng.integers(2, 4))):
            child = _random_ast(rng, depth - 1)
            if isinstance(child, Or):
                child = And((child, Term("zeta")))
            options.append(child)
        return Or(tuple(options))

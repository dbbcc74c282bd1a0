"""
Tests for tokenization, vocabularies, document-term matrices and lexical diversity.
"""
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pytest

from topicgap.api import ConfigurationError, DataError
from topicgap.corpus import CorpusLayer, Document, Layer, Programme, Provenance
from topicgap.preprocess import (
    CovariateSpec,
    DocTermMatrix,
    Period,
    PeriodTable,
    TokenizerOptions,
    Vocabulary,
    VocabularyOptions,
    build_vocabulary,
    builtin_stopwords,
    lexical_diversity,
    split_periods,
    term_frequencies_by_period,
    tokenize,
    tokenize_layer,
    vectorize,
)

log = logging.getLogger(__name__)

_PLAIN = TokenizerOptions(stemming=False)


def test_tokenize() -> None:
    assert tokenize("Climate-smart CROPS!") == ["climat", "smart", "crop"]
    assert tokenize("The crops and soils", _PLAIN) == ["crops", "soils"]
    assert tokenize("CO2 in 2020", _PLAIN) == ["co2", "2020"]
    assert tokenize("An ox at sea", TokenizerOptions(stemming=False, min_len=2)) == [
        "ox",
        "sea",
    ]
    assert tokenize(
        "crops and soils",
        TokenizerOptions(stemming=False, extra_stopwords=("Crops",)),
    ) == ["soils"]
    assert tokenize("the soil", TokenizerOptions(stemming=False, builtin_stopwords=False)) == [
        "the",
        "soil",
    ]
    assert "the" in builtin_stopwords()

    with pytest.raises(ConfigurationError):
        TokenizerOptions(min_len=0)


def test_options_hash() -> None:
    assert TokenizerOptions().options_hash() == TokenizerOptions().options_hash()
    assert TokenizerOptions().options_hash() != _PLAIN.options_hash()
    assert (
        TokenizerOptions(extra_stopwords=("a", "b")).options_hash()
        == TokenizerOptions(extra_stopwords=["b", "a"]).options_hash()  # type: ignore
    )
    assert (
        TokenizerOptions(min_len=4).options_hash()
        != TokenizerOptions(min_len=3).options_hash()
    )


def test_tokenize_layer(research: CorpusLayer) -> None:
    serial = tokenize_layer(research)
    assert len(serial) == len(research)
    assert serial == tokenize_layer(research, n_jobs=3)
    assert serial[0] == tokenize(research.documents[0].text)


def test_vocabulary() -> None:
    layer = _layer(["solar wind grid", "solar wind storage", "solar carbon storage", "solar carbon policy"])
    vocabulary = build_vocabulary(
        layer, VocabularyOptions(min_df=2, max_df_ratio=0.75), tokenizer=_PLAIN
    )
    assert vocabulary.terms == ("carbon", "storage", "wind")
    assert vocabulary.doc_freq == (2, 2, 2)
    assert vocabulary.options_hash == _PLAIN.options_hash()
    assert vocabulary.index("storage") == 1
    assert vocabulary.get_index("solar") is None
    assert "wind" in vocabulary
    assert len(vocabulary) == 3

    restricted = vocabulary.restrict([0, 2])
    assert restricted.terms == ("carbon", "wind")

    # a ratio of 1 keeps terms of every document, and repeats count once
    everything = build_vocabulary(
        layer,
        VocabularyOptions(min_df=1, max_df_ratio=1.0),
        tokens=[["solar", "solar", "wind"], ["solar"], ["solar", "grid"], ["solar"]],
    )
    assert everything.terms == ("grid", "solar", "wind")
    assert everything.doc_freq == (1, 4, 1)

    with pytest.raises(ConfigurationError, match="relax"):
        build_vocabulary(layer, VocabularyOptions(min_df=10), tokenizer=_PLAIN)
    with pytest.raises(DataError):
        build_vocabulary(layer.with_documents([]), tokenizer=_PLAIN)
    with pytest.raises(ConfigurationError):
        VocabularyOptions(max_df_ratio=0.0)
    with pytest.raises(ValueError):
        Vocabulary(terms=("b", "a"), doc_freq=(1, 1), options_hash="x")


def test_vocabulary_persistence(tmp_path: Path) -> None:
    vocabulary = Vocabulary(terms=("a", "b"), doc_freq=(3, 2), options_hash="h", min_df=2)
    vocabulary.save(tmp_path / "vocabulary.json")
    assert Vocabulary.load(tmp_path / "vocabulary.json") == vocabulary


def test_vectorize(caplog: pytest.LogCaptureFixture) -> None:
    layer = _layer(["solar wind grid", "solar wind storage", "solar carbon storage", "solar carbon policy"])
    vocabulary = build_vocabulary(
        layer, VocabularyOptions(min_df=2, max_df_ratio=0.75), tokenizer=_PLAIN
    )

    with caplog.at_level(logging.WARNING):
        dtm = vectorize(layer, vocabulary, tokenizer=_PLAIN, min_tokens=2)
    assert any("dropped 2 documents" in r.getMessage() for r in caplog.records)

    assert dtm.doc_ids == ("d2", "d3")
    assert dtm.dropped == ("d1", "d4")
    assert dtm.vocabulary.terms == ("carbon", "storage", "wind")
    assert dtm.counts.toarray().tolist() == [[0, 1, 1], [1, 1, 0]]
    assert dtm.covariate_names == ("(intercept)",)
    assert dtm.covariates.tolist() == [[1.0], [1.0]]
    assert dtm.doc_lengths.tolist() == [2, 2]

    indices, counts = dtm.row(1)
    assert indices.tolist() == [0, 1]
    assert counts.tolist() == [1.0, 1.0]

    # repeated tokens are counted, unknown tokens ignored
    repeated = vectorize(
        layer,
        vocabulary,
        tokenizer=_PLAIN,
        min_tokens=1,
        tokens=[["wind", "wind", "solar"], ["storage"], ["carbon", "grid"], ["carbon"]],
    )
    assert repeated.counts.toarray().tolist() == [[0, 0, 2], [0, 1, 0], [1, 0, 0], [1, 0, 0]]

    # terms without occurrences in retained documents are removed
    dtm = vectorize(layer.with_documents(layer.documents[1:3]), vocabulary, tokenizer=_PLAIN, min_tokens=1)
    assert dtm.vocabulary.terms == ("carbon", "storage", "wind")
    dtm = vectorize(layer.with_documents(layer.documents[:2]), vocabulary, tokenizer=_PLAIN, min_tokens=1)
    assert dtm.vocabulary.terms == ("storage", "wind")
    assert dtm.n_terms == 2

    with pytest.raises(ConfigurationError, match="tokenizer options"):
        vectorize(layer, vocabulary)
    with pytest.raises(DataError):
        vectorize(layer, vocabulary, tokenizer=_PLAIN, min_tokens=5)


def test_design_matrix() -> None:
    layer = _layer(["solar wind grid", "solar wind storage", "solar carbon storage", "solar carbon policy"])
    vocabulary = build_vocabulary(
        layer, VocabularyOptions(min_df=2, max_df_ratio=0.75), tokenizer=_PLAIN
    )

    dtm = vectorize(
        layer,
        vocabulary,
        CovariateSpec(categorical=("programme", "period"), numeric=("year",)),
        tokenizer=_PLAIN,
        periods=PeriodTable.default(),
        min_tokens=1,
    )
    assert dtm.covariate_names == (
        "(intercept)",
        "programme[FP7]",
        "programme[H2020]",
        "period[AR5]",
        "period[AR6]",
        "year",
    )
    assert dtm.covariates[:, :5].tolist() == [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 1.0, 0.0],
        [1.0, 1.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0, 0.0, 1.0],
    ]
    year = dtm.covariates[:, 5]
    assert year.mean() == pytest.approx(0.0, abs=1e-12)
    assert year.std() == pytest.approx(1.0)
    assert year[0] < year[1] < year[2] < year[3]

    # categorical levels of other fields come from the metadata, sorted
    dtm = vectorize(
        layer,
        vocabulary,
        CovariateSpec(categorical=("call",)),
        tokenizer=_PLAIN,
        min_tokens=1,
    )
    assert dtm.covariate_names == ("(intercept)", "call[b]")

    with pytest.raises(DataError, match="'d1'"):
        vectorize(
            layer.with_documents([_document("d1", "solar wind", 2005, extra={})]),
            vocabulary,
            CovariateSpec(categorical=("call",)),
            tokenizer=_PLAIN,
            min_tokens=1,
        )
    same_year = layer.with_documents(
        [_document("x1", "solar wind", 2010), _document("x2", "solar carbon", 2010)]
    )
    with pytest.raises(DataError, match="constant"):
        vectorize(
            same_year,
            vocabulary,
            CovariateSpec(numeric=("year",)),
            tokenizer=_PLAIN,
            min_tokens=1,
        )
    with pytest.raises(DataError, match="not numeric"):
        vectorize(
            same_year,
            vocabulary,
            CovariateSpec(numeric=("programme",)),
            tokenizer=_PLAIN,
            min_tokens=1,
        )
    with pytest.raises(ConfigurationError, match="period table"):
        vectorize(
            layer,
            vocabulary,
            CovariateSpec(categorical=("period",)),
            tokenizer=_PLAIN,
            min_tokens=1,
        )
    with pytest.raises(ConfigurationError):
        CovariateSpec(categorical=("year",), numeric=("year",))


def test_dtm_persistence(tmp_path: Path) -> None:
    layer = _layer(["solar wind grid", "solar wind storage", "solar carbon storage", "solar carbon policy"])
    vocabulary = build_vocabulary(
        layer, VocabularyOptions(min_df=2, max_df_ratio=0.75), tokenizer=_PLAIN
    )
    dtm = vectorize(
        layer,
        vocabulary,
        CovariateSpec(categorical=("programme",), numeric=("year",)),
        tokenizer=_PLAIN,
        min_tokens=2,
    )
    dtm.save(tmp_path / "dtm")
    loaded = DocTermMatrix.load(tmp_path / "dtm")

    assert loaded.doc_ids == dtm.doc_ids
    assert loaded.dropped == dtm.dropped
    assert loaded.vocabulary == dtm.vocabulary
    assert loaded.covariate_names == dtm.covariate_names
    assert (loaded.counts != dtm.counts).nnz == 0
    # design matrices are written with full precision
    assert np.array_equal(loaded.covariates, dtm.covariates)

    subset = dtm.subset([1])
    assert subset.doc_ids == ("d3",)
    assert subset.counts.toarray().tolist() == [[1, 1, 0]]


def test_periods() -> None:
    periods = PeriodTable.default()
    assert periods.labels == ["AR1", "AR2", "AR3", "AR4", "AR5", "AR6"]
    assert periods.period_of(1979) == Period("AR1", 1900, 1990)
    assert periods.period_of(2014) == Period("AR5", 2007, 2014)
    assert periods.period_of(2022) is None
    assert Period("AR3", 1995, 2000).span == "1995-2000"
    assert 1995 in Period("AR3", 1995, 2000)
    assert PeriodTable.from_records(periods.to_records()) == periods

    with pytest.raises(ConfigurationError, match="non-overlapping"):
        PeriodTable((Period("a", 2000, 2005), Period("b", 2005, 2010)))
    with pytest.raises(ConfigurationError, match="unique"):
        PeriodTable((Period("a", 2000, 2004), Period("a", 2005, 2010)))
    with pytest.raises(ConfigurationError):
        Period("a", 2005, 2000)
    with pytest.raises(ConfigurationError):
        PeriodTable.from_records([{"label": "a", "start": 2000}])


def test_split_periods(research: CorpusLayer) -> None:
    assignment = split_periods(research, PeriodTable.default())
    assert list(assignment) == research.ids
    assert assignment["2-s2.0-0001"] == "AR1"
    assert assignment["2-s2.0-0018"] == "AR6"

    short = PeriodTable((Period("early", 1970, 2000),))
    with pytest.raises(DataError, match="2021"):
        split_periods(research, short)


def test_lexical_diversity() -> None:
    layer = _layer(
        ["alpha beta beta", "gamma alpha", "beta delta delta delta", "epsilon alpha", "zeta"],
        years=[2001, 2003, 2006, 2011, 2013],
    )
    periods = _three_periods()
    table = lexical_diversity(layer, periods, _PLAIN)

    assert table.columns.tolist() == [
        "period",
        "label",
        "new_terms",
        "new_term_rate",
        "type_token_ratio",
    ]
    assert table["period"].tolist() == ["2000-2004", "2005-2009", "2010-2014"]
    assert table["label"].tolist() == ["P1", "P2", "P3"]

    # period 1: 5 tokens, types {alpha, beta, gamma}
    # period 2: 4 tokens, types {beta, delta}, new {delta}
    # period 3: 3 tokens, types {epsilon, alpha, zeta}, new {epsilon, zeta}
    assert table["new_terms"].tolist() == [3, 1, 2]
    assert table["new_term_rate"].tolist() == [3 / 5, 1 / 4, 2 / 3]
    assert table["type_token_ratio"].tolist() == [3 / 5, 2 / 4, 3 / 3]

    # periods without documents have undefined rates
    periods = PeriodTable(periods.periods + (Period("P4", 2015, 2019),))
    row = lexical_diversity(layer, periods, _PLAIN).iloc[3]
    assert row["new_terms"] == 0
    assert math.isnan(row["new_term_rate"])
    assert math.isnan(row["type_token_ratio"])


def test_term_frequencies() -> None:
    layer = _layer(
        ["alpha beta beta", "gamma alpha", "beta delta delta delta", "epsilon alpha", "zeta"],
        years=[2001, 2003, 2006, 2011, 2013],
    )
    table = term_frequencies_by_period(layer, _three_periods(), n=2, tokenizer=_PLAIN)
    assert [tuple(row) for row in table.itertuples(index=False)] == [
        ("P1", 1, "alpha", 2),
        ("P1", 2, "beta", 2),
        ("P2", 1, "delta", 3),
        ("P2", 2, "beta", 1),
        ("P3", 1, "alpha", 1),
        ("P3", 2, "epsilon", 1),
    ]


def _three_periods() -> PeriodTable:
    return PeriodTable(
        (Period("P1", 2000, 2004), Period("P2", 2005, 2009), Period("P3", 2010, 2014))
    )


def _document(
    doc_id: str,
    abstract: str,
    year: int,
    programme: Optional[Programme] = Programme.FP7,
    extra: Optional[dict] = None,  # type: ignore[type-arg]
) -> Document:
    return Document(
        id=doc_id,
        title="",
        abstract=abstract,
        year=year,
        layer=Layer.Projects,
        programme=programme,
        extra={} if extra is None else extra,
    )


def _layer(abstracts: Sequence[str], years: Optional[List[int]] = None) -> CorpusLayer:
    # project documents d1, d2, ... with programmes FP6, FP7, FP7, H2020, ...
    years = years or [2005, 2008, 2012, 2016][: len(abstracts)]
    programmes: Tuple[Programme, ...] = (
        Programme.FP6,
        Programme.FP7,
        Programme.FP7,
        Programme.H2020,
    )
    documents = [
        _document(
            f"d{i + 1}",
            abstract,
            year,
            programmes[i % len(programmes)],
            extra={"call": "a" if i % 2 == 0 else "b"},
        )
        for i, (abstract, year) in enumerate(zip(abstracts, years))
    ]
    return CorpusLayer(
        layer=Layer.Projects,
        documents=tuple(documents),
        provenance=Provenance(source="memory", source_sha256="0" * 64),
    )

"""
Test cases for the `topicgap.gap` module
"""
import json
import logging
from pathlib import Path

import numpy as np
import pytest

from topicgap.api import ConfigurationError, DataError
from topicgap.gap import (
    GapMatrix,
    align_vocabularies,
    cosine_similarity,
    cross_layer_matrix,
    cumulative_similarity,
    gap_report,
)
from topicgap.preprocess import Vocabulary

log = logging.getLogger(__name__)


def test_cosine_oracle() -> None:
    rng = np.random.default_rng(42)
    for _ in range(1000):
        n = int(rng.integers(2, 501))
        a = rng.uniform(size=n) * (rng.random(n) < 0.7)
        b = rng.uniform(size=n) * (rng.random(n) < 0.7)
        a[0] = b[0] = 1.0
        expected = np.dot(a, b) / (np.sqrt(np.dot(a, a)) * np.sqrt(np.dot(b, b)))
        assert abs(cosine_similarity(a, b) - expected) <= 1e-12

        assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-12)

        disjoint_a = np.where(np.arange(n) % 2 == 0, a + 0.1, 0.0)
        disjoint_b = np.where(np.arange(n) % 2 == 1, b + 0.1, 0.0)
        assert cosine_similarity(disjoint_a, disjoint_b) == 0.0

    assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0


def test_cosine_errors() -> None:
    with pytest.raises(DataError, match="zero vectors"):
        cosine_similarity(np.zeros(3), np.ones(3))
    with pytest.raises(DataError, match="non-negative"):
        cosine_similarity(np.array([1.0, -1.0]), np.ones(2))
    with pytest.raises(ValueError, match="vectors of equal length"):
        cosine_similarity(np.ones(2), np.ones(3))


def test_align_vocabularies() -> None:
    vocab_a = _vocabulary("carbon", "drought", "wind")
    vocab_b = _vocabulary("grid", "solar", "wind")

    union = align_vocabularies(vocab_a, vocab_b)
    assert union.terms == ("carbon", "drought", "grid", "solar", "wind")
    assert union.remap_a.tolist() == [0, 1, 4]
    assert union.remap_b.tolist() == [2, 3, 4]
    np.testing.assert_array_equal(
        union.embed_b(np.array([[0.2, 0.3, 0.5]])), [[0, 0, 0.2, 0.3, 0.5]]
    )

    same = align_vocabularies(vocab_a, vocab_a)
    assert same.terms == vocab_a.terms
    assert same.remap_a.tolist() == same.remap_b.tolist() == [0, 1, 2]

    with pytest.raises(ConfigurationError, match="different tokenizer options"):
        align_vocabularies(vocab_a, _vocabulary("wind", options_hash="other"))
    with pytest.raises(ValueError, match="arg beta has 2 columns"):
        union.embed_a(np.ones((1, 2)))


def test_cross_layer_matrix_toy() -> None:
    union = align_vocabularies(_vocabulary("a", "b", "c"), _vocabulary("a", "b", "c"))
    beta_a = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    beta_b = np.array([[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])

    s = cross_layer_matrix(beta_a, beta_b, union)
    np.testing.assert_allclose(s.values[0], [0.7071, 0.0], atol=1e-4)
    assert s.values[0, 0] == pytest.approx(1 / np.sqrt(2), abs=1e-12)
    assert s.labels_a == ("A1", "A2")
    assert s.labels_b == ("B1", "B2")
    assert s.min == 0.0

    rows, columns = cumulative_similarity(s.values)
    np.testing.assert_allclose(rows, s.row_sums)
    np.testing.assert_allclose(columns, [np.sqrt(2), 0.0])

    frame = s.to_frame()
    assert frame.index.name == "topic"
    assert frame.columns.tolist() == ["B1", "B2"]


def test_disjoint_layers() -> None:
    union = align_vocabularies(_vocabulary("a", "b"), _vocabulary("c", "d"))
    s = cross_layer_matrix(
        np.array([[0.5, 0.5], [0.9, 0.1]]), np.array([[0.3, 0.7]]), union
    )
    np.testing.assert_array_equal(s.values, 0.0)


def test_top_m_truncation() -> None:
    union = align_vocabularies(_vocabulary("a", "b", "c"), _vocabulary("a", "b", "c"))
    beta_a = np.array([[0.6, 0.3, 0.1], [0.1, 0.2, 0.7]])
    beta_b = np.array([[0.1, 0.3, 0.6], [0.5, 0.4, 0.1]])

    s = cross_layer_matrix(beta_a, beta_b, union, top_m=1)
    # with one term per topic, topics match exactly or not at all
    np.testing.assert_array_equal(s.values, [[0.0, 1.0], [1.0, 0.0]])
    assert s.top_m == 1

    with pytest.raises(ConfigurationError, match="arg top_m must be in range"):
        cross_layer_matrix(beta_a, beta_b, union, top_m=4)


def test_self_similarity() -> None:
    rng = np.random.default_rng(3)
    vocabulary = _vocabulary(*(f"w{v:03d}" for v in range(200)))
    beta = rng.dirichlet(np.full(200, 0.1), size=8)
    union = align_vocabularies(vocabulary, vocabulary)

    s = cross_layer_matrix(beta, beta, union)
    np.testing.assert_allclose(np.diag(s.values), 1.0, atol=1e-12)
    np.testing.assert_allclose(s.values, s.values.T, atol=1e-12)

    report = gap_report(s, 8)
    for entry in report.gaps_a + report.gaps_b:
        assert entry.cumulative_similarity >= 1.0 - 1e-12

    threaded = cross_layer_matrix(beta, beta, union, n_jobs=4)
    np.testing.assert_array_equal(threaded.values, s.values)


def test_gap_report() -> None:
    s = GapMatrix(
        values=np.array([[0.9, 0.4, 0.5], [0.05, 0.0, 0.1], [0.7, 0.6, 0.8]]),
        labels_a=("R1", "R2", "R3"),
        labels_b=("P1", "P2", "P3"),
        options_hash="h",
    )
    top_words = [[f"r{k}w{i}" for i in range(12)] for k in range(3)]
    report = gap_report(s, 2, top_words_a=top_words)

    # the isolated row is ranked first
    assert [entry.label for entry in report.gaps_a] == ["R2", "R1"]
    assert report.gaps_a[1].cumulative_similarity == pytest.approx(1.8)
    first = report.gaps_a[0]
    assert first.index == 1
    assert first.cumulative_similarity == pytest.approx(0.15)
    assert first.best_match == "P3"
    assert first.best_similarity == pytest.approx(0.1)
    assert len(first.top_words) == 10

    assert [entry.label for entry in report.gaps_b] == ["P2", "P3"]
    assert report.gaps_b[0].best_match == "R3"
    assert report.gaps_b[0].cumulative_similarity == pytest.approx(1.0)
    assert report.gaps_b[0].top_words == ()
    assert report.min_similarity == 0.0
    assert report.max_similarity == 0.9

    # ties are broken by topic index
    tied = GapMatrix(
        values=np.full((3, 2), 0.5), labels_a=("a", "b", "c"), labels_b=("x", "y"),
        options_hash="h",
    )
    assert [entry.index for entry in gap_report(tied, 2).gaps_a] == [0, 1]

    with pytest.raises(ConfigurationError, match=r"arg n must be in range \[1, 2\]"):
        gap_report(tied, 3)
    with pytest.raises(ConfigurationError, match="arg n must be in range"):
        gap_report(tied, 0)


def test_gap_report_save(tmp_path: Path) -> None:
    s = GapMatrix(
        values=np.array([[0.2, 0.4], [0.1, 0.3]]),
        labels_a=("R1", "R2"),
        labels_b=("P1", "P2"),
        options_hash="h",
    )
    report = gap_report(s, 1, top_words_a=[["wind"], ["soil"]])
    report.save(tmp_path / "report.json", header={"n": 1, "top_m": None})

    data = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert data["header"] == {"n": 1, "top_m": None}
    assert data["gaps_a"] == [
        {
            "index": 1,
            "label": "R2",
            "cumulative_similarity": pytest.approx(0.4),
            "top_words": ["soil"],
            "best_match": "P2",
            "best_similarity": 0.3,
        }
    ]
    assert data["gaps_b"][0]["label"] == "P1"


def test_gap_matrix_persistence(tmp_path: Path) -> None:
    rng = np.random.default_rng(0)
    s = GapMatrix(
        values=rng.uniform(size=(3, 4)),
        labels_a=("R1", "R2", "R3"),
        labels_b=("P1", "P2", "P3", "P4"),
        options_hash="abc",
        top_m=20,
    )
    s.save(tmp_path)
    loaded = GapMatrix.load(tmp_path)
    np.testing.assert_array_equal(loaded.values, s.values)
    assert loaded.labels_a == s.labels_a
    assert loaded.labels_b == s.labels_b
    assert loaded.top_m == 20
    assert loaded.options_hash == "abc"
    assert (tmp_path / "gap_matrix.csv").read_text(encoding="utf-8").startswith(
        "topic,P1,P2,P3,P4\n"
    )

    with pytest.raises(ValueError, match=r"must have shape \(2, 4\)"):
        GapMatrix(
            values=s.values, labels_a=("R1", "R2"), labels_b=s.labels_b, options_hash=""
        )


def _vocabulary(*terms: str, options_hash: str = "tokenizer") -> Vocabulary:
    return Vocabulary(
        terms=tuple(terms), doc_freq=(1,) * len(terms), options_hash=options_hash
    )

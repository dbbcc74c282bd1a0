"""
Documents and corpus layers.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from ..api import AllTracker, DataError

log = logging.getLogger(__name__)

__all__ = [
    "Layer",
    "Programme",
    "Document",
    "Provenance",
    "SkippedRow",
    "IngestReport",
    "CorpusLayer",
]

#: Lowest calendar year accepted for a document.
YEAR_MIN = 1900

#: Highest calendar year accepted for a document.
YEAR_MAX = 2100

__tracker = AllTracker(globals())


class Layer(Enum):
    """
    The two corpus layers compared by the gap analysis.
    """

    #: peer-reviewed research abstracts
    Research = "Research"
    #: abstracts of funded innovation projects
    Projects = "Projects"


class Programme(Enum):
    """
    EU research framework programmes funding the projects layer.
    """

    FP6 = "FP6"
    FP7 = "FP7"
    H2020 = "H2020"


@dataclass(frozen=True)
class Document:
    """
    One abstract-bearing record with its metadata.
    """

    #: opaque identifier, unique within a layer
    id: str
    #: the title; may be empty
    title: str
    #: the abstract (or project objective); never empty
    abstract: str
    #: calendar year of publication, or the project start year
    year: int
    #: the layer this document belongs to
    layer: Layer
    #: the funding programme; set if and only if the layer is :attr:`.Layer.Projects`
    programme: Optional[Programme] = None
    #: pass-through metadata, e.g., cost, coordinator country, or call
    extra: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.abstract.strip():
            raise DataError(f"document {self.id!r} has an empty abstract")
        if not YEAR_MIN <= self.year <= YEAR_MAX:
            raise DataError(
                f"document {self.id!r} has year {self.year} outside "
                f"[{YEAR_MIN}, {YEAR_MAX}]"
            )
        if (self.programme is not None) != (self.layer is Layer.Projects):
            raise DataError(
                f"document {self.id!r}: a programme is required for, and only "
                f"permitted in, the {Layer.Projects.value} layer"
            )

    @property
    def text(self) -> str:
        """
        Title and abstract, concatenated for matching and tokenization.
        """
        return f"{self.title}\n{self.abstract}" if self.title else self.abstract

    def to_json(self) -> str:
        """
        Serialize this document as a single JSON line with fields in fixed order.

        :return: the JSON text, without a trailing newline
        """
        return json.dumps(
            {
                "id": self.id,
                "layer": self.layer.value,
                "year": self.year,
                "programme": None if self.programme is None else self.programme.value,
                "title": self.title,
                "abstract": self.abstract,
                "extra": {key: self.extra[key] for key in sorted(self.extra)},
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> Document:
        """
        Deserialize a document from a JSON line created by :meth:`.to_json`.

        :param line: the JSON text
        :return: the document
        """
        record: Dict[str, Any] = json.loads(line)
        programme = record.get("programme")
        return cls(
            id=record["id"],
            title=record["title"],
            abstract=record["abstract"],
            year=int(record["year"]),
            layer=Layer(record["layer"]),
            programme=None if programme is None else Programme(programme),
            extra=dict(record.get("extra", {})),
        )


@dataclass(frozen=True)
class Provenance:
    """
    Where a layer's documents came from.
    """

    #: path of the source file
    source: str
    #: SHA-256 hex digest of the source file contents
    source_sha256: str
    #: ISO timestamp of the ingest; kept in memory only, never serialized
    ingested_at: Optional[str] = field(default=None, compare=False)

    def to_dict(self) -> Dict[str, str]:
        """
        :return: the serializable fields of this provenance record
        """
        return {"source": self.source, "source_sha256": self.source_sha256}


@dataclass(frozen=True)
class SkippedRow:
    """
    A source row that was not turned into a document.
    """

    #: 0-based row number in the source file, excluding the header
    row: int
    #: the reason for skipping the row
    reason: str
    #: the offending raw value, if any
    raw: Optional[str] = None


@dataclass(frozen=True)
class IngestReport:
    """
    Row counts of an ingest run.
    """

    #: number of data rows in the source file
    n_rows: int
    #: number of rows turned into documents
    n_kept: int
    #: the rows that were skipped, in file order
    skipped: Tuple[SkippedRow, ...] = ()

    def count(self, reason: str) -> int:
        """
        Count the skipped rows with the given reason.

        :param reason: one of the ``REASON_…`` constants of
            :class:`.CorpusLayer`
        :return: the number of rows skipped for that reason
        """
        return sum(1 for skipped in self.skipped if skipped.reason == reason)


@dataclass(frozen=True)
class CorpusLayer:
    """
    An ordered collection of documents belonging to one layer.
    """

    #: the layer tag
    layer: Layer
    #: the documents, in stable source order
    documents: Tuple[Document, ...]
    #: where the documents came from
    provenance: Provenance
    #: row counts of the ingest that created this layer, if any
    report: Optional[IngestReport] = field(default=None, compare=False)

    #: skip reason: the abstract is empty after trimming whitespace
    REASON_EMPTY_ABSTRACT = "empty abstract"
    #: skip reason: the year could not be parsed or is out of range
    REASON_INVALID_YEAR = "invalid year"
    #: skip reason: the programme is not one of FP6, FP7, H2020
    REASON_UNKNOWN_PROGRAMME = "unknown programme"
    #: skip reason: the id occurred in an earlier row
    REASON_DUPLICATE_ID = "duplicate id"
    #: skip reason: the id column is empty
    REASON_MISSING_ID = "missing id"

    def __post_init__(self) -> None:
        seen = set()
        for document in self.documents:
            if document.id in seen:
                raise DataError(f"duplicate document id {document.id!r} in layer")
            if document.layer is not self.layer:
                raise DataError(
                    f"document {document.id!r} belongs to layer "
                    f"{document.layer.value}, not {self.layer.value}"
                )
            seen.add(document.id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    @property
    def ids(self) -> List[str]:
        """
        The document ids, in layer order.
        """
        return [document.id for document in self.documents]

    def with_documents(self, documents: Iterable[Document]) -> CorpusLayer:
        """
        Create a layer with the same tag and provenance but different documents.

        :param documents: the documents of the new layer
        :return: the new layer
        """
        return CorpusLayer(
            layer=self.layer, documents=tuple(documents), provenance=self.provenance
        )

    def programme_counts(self) -> Dict[str, int]:
        """
        Count documents per programme, in programme order.

        :return: a mapping of programme names to document counts
        """
        return {
            programme.value: sum(
                1 for document in self.documents if document.programme is programme
            )
            for programme in Programme
        }

    def to_jsonl(self) -> str:
        """
        Serialize the documents of this layer as JSON Lines.

        :return: one JSON document per line, each line terminated by a newline
        """
        return "".join(document.to_json() + "\n" for document in self.documents)

    def save(self, path: Union[str, Path]) -> None:
        """
        Write this layer to a JSON Lines file, with its provenance in a sidecar
        file named ``<stem>.meta.json``.

        :param path: the path of the JSON Lines file
        """
        path = Path(path)
        path.write_text(self.to_jsonl(), encoding="utf-8")
        meta = {"layer": self.layer.value, "provenance": self.provenance.to_dict()}
        path.with_suffix(".meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> CorpusLayer:
        """
        Read a layer written by :meth:`.save`.

        :param path: the path of the JSON Lines file
        :return: the layer
        """
        path = Path(path)
        meta = json.loads(path.with_suffix(".meta.json").read_text(encoding="utf-8"))
        documents = tuple(
            Document.from_json(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        return cls(
            layer=Layer(meta["layer"]),
            documents=documents,
            provenance=Provenance(**meta["provenance"]),
        )


__tracker.validate()

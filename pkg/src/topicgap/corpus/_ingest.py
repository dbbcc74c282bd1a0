"""
Ingestion of delimited bibliographic and project exports.
"""
import datetime
import hashlib
import logging
import re
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

import pandas as pd

from ..api import AllTracker, ConfigurationError, DataError
from ._document import (
    YEAR_MAX,
    YEAR_MIN,
    CorpusLayer,
    Document,
    IngestReport,
    Layer,
    Programme,
    Provenance,
    SkippedRow,
)

log = logging.getLogger(__name__)

__all__ = [
    "detect_delimiter",
    "normalize_programme",
    "parse_year",
    "parse_bibliographic",
    "parse_projects",
]

_RE_ISO_DATE = re.compile(r"^(\d{4})-\d{1,2}(-\d{1,2})?([T ].*)?$")
_RE_PROGRAMME_NOISE = re.compile(r"[\s_\-]")

_PROGRAMME_ALIASES: Dict[str, Programme] = {
    "FP6": Programme.FP6,
    "FP7": Programme.FP7,
    "H2020": Programme.H2020,
    "HORIZON2020": Programme.H2020,
}

# fields a bibliographic mapping must name, and may name
_BIBLIOGRAPHIC_REQUIRED = ("title", "abstract", "year")
_BIBLIOGRAPHIC_OPTIONAL = ("id",)

# fields a project mapping must name, and may name
_PROJECTS_REQUIRED = ("id", "abstract", "programme", "year")
_PROJECTS_OPTIONAL = ("title",)

_ID_PREFIX = {Layer.Research: "R", Layer.Projects: "P"}

__tracker = AllTracker(globals())


def detect_delimiter(header: str) -> str:
    """
    Detect the delimiter of a CSV file from its header line.

    :param header: the header line
    :return: ``";"`` if the header contains more semicolons than commas,
        else ``","``
    """
    return ";" if header.count(";") > header.count(",") else ","


def normalize_programme(raw: str) -> Optional[Programme]:
    """
    Map a programme name as found in project exports to a :class:`.Programme`.

    Case, whitespace, hyphens and underscores are ignored, so ``"H2020"``,
    ``"h-2020"`` and ``"Horizon 2020"`` are all recognized.

    :param raw: the programme name
    :return: the programme, or ``None`` if not recognized
    """
    return _PROGRAMME_ALIASES.get(_RE_PROGRAMME_NOISE.sub("", raw.upper()))


def parse_year(raw: str) -> Optional[int]:
    """
    Parse a calendar year from an integer, a float with zero fraction, or an ISO
    date.

    :param raw: the text to parse
    :return: the year, or ``None`` if the text is not parsable or the year is
        outside the supported range
    """
    raw = raw.strip()
    year: Optional[int]
    try:
        value = float(raw)
        year = int(value) if value.is_integer() else None
    except ValueError:
        match = _RE_ISO_DATE.match(raw)
        year = int(match[1]) if match else None

    if year is None or not YEAR_MIN <= year <= YEAR_MAX:
        return None
    return year


def parse_bibliographic(
    path: Union[str, Path], mapping: Mapping[str, str]
) -> CorpusLayer:
    """
    Read the research layer from a bibliographic export.

    The mapping names the source columns of fields ``title``, ``abstract``, and
    ``year``, and optionally ``id``; if no id column is mapped, documents are
    numbered ``R000001``, ``R000002``, … in row order.
    All other columns are kept as pass-through metadata.

    Rows with an empty abstract or an unparsable year are skipped with a warning,
    as are rows repeating an earlier id.

    :param path: path of the UTF-8 CSV file, delimited by commas or semicolons
    :param mapping: map of document field names to column names
    :return: the research layer; its ``report`` attribute has the row counts
    :raise ConfigurationError: the mapping is incomplete, or names columns not
        present in the file
    """
    return _parse(
        path,
        mapping,
        layer=Layer.Research,
        required=_BIBLIOGRAPHIC_REQUIRED,
        optional=_BIBLIOGRAPHIC_OPTIONAL,
    )


def parse_projects(path: Union[str, Path], mapping: Mapping[str, str]) -> CorpusLayer:
    """
    Read the projects layer from a project export.

    The mapping names the source columns of fields ``id``, ``abstract`` (the project
    objective), ``programme`` and ``year`` (the start year or date), and optionally
    ``title``.
    All other columns are kept as pass-through metadata.

    Rows with an empty abstract, an unparsable year or a programme other than
    FP6, FP7, H2020 are skipped with a warning; the raw programme of a skipped row is
    preserved in the ingest report.

    :param path: path of the UTF-8 CSV file, delimited by commas or semicolons
    :param mapping: map of document field names to column names
    :return: the projects layer; its ``report`` attribute has the row counts
    :raise ConfigurationError: the mapping is incomplete, or names columns not
        present in the file
    """
    return _parse(
        path,
        mapping,
        layer=Layer.Projects,
        required=_PROJECTS_REQUIRED,
        optional=_PROJECTS_OPTIONAL,
    )


__tracker.validate()


def _parse(
    path: Union[str, Path],
    mapping: Mapping[str, str],
    *,
    layer: Layer,
    required: Tuple[str, ...],
    optional: Tuple[str, ...],
) -> CorpusLayer:
    path = Path(path)

    missing_fields = [name for name in required if name not in mapping]
    if missing_fields:
        raise ConfigurationError(
            f"arg mapping must name columns for fields {', '.join(required)} "
            f"but is missing {', '.join(missing_fields)}"
        )
    unknown_fields = sorted(set(mapping) - set(required) - set(optional))
    if unknown_fields:
        raise ConfigurationError(
            f"arg mapping names unknown fields: {', '.join(unknown_fields)}"
        )

    if not path.is_file():
        raise ConfigurationError(f"input file not found: {path}")

    raw = path.read_bytes()
    try:
        content = raw.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise DataError(f"input file {path} is not valid UTF-8: {e}") from e

    header = content.split("\n", 1)[0]
    try:
        frame = pd.read_csv(
            path,
            sep=detect_delimiter(header),
            dtype=str,
            keep_default_na=False,
            encoding="utf-8-sig",
        )
    except pd.errors.EmptyDataError as e:
        raise DataError(f"input file {path} is empty: {e}") from e
    except pd.errors.ParserError as e:
        raise DataError(f"input file {path} is not a valid CSV file: {e}") from e

    missing_columns = [
        column for column in mapping.values() if column not in frame.columns
    ]
    if missing_columns:
        raise ConfigurationError(
            f"columns {', '.join(map(repr, missing_columns))} are mapped but not "
            f"present in {path}; available columns are "
            f"{', '.join(map(repr, frame.columns))}"
        )

    documents, skipped = _rows_to_documents(frame, mapping, layer)

    report = IngestReport(n_rows=len(frame), n_kept=len(documents), skipped=skipped)
    provenance = Provenance(
        source=str(path),
        source_sha256=hashlib.sha256(raw).hexdigest(),
        ingested_at=datetime.datetime.now().isoformat(timespec="seconds"),
    )

    log.info(
        f"ingested {report.n_kept} of {report.n_rows} rows from {path} into the "
        f"{layer.value} layer at {provenance.ingested_at}"
    )
    for reason in sorted({row.reason for row in skipped}):
        log.info(f"skipped {report.count(reason)} rows: {reason}")

    return CorpusLayer(
        layer=layer, documents=tuple(documents), provenance=provenance, report=report
    )


def _rows_to_documents(
    frame: pd.DataFrame, mapping: Mapping[str, str], layer: Layer
) -> Tuple[List[Document], Tuple[SkippedRow, ...]]:
    mapped_columns = set(mapping.values())
    extra_columns = [column for column in frame.columns if column not in mapped_columns]
    id_column = mapping.get("id")
    title_column = mapping.get("title")

    documents: List[Document] = []
    skipped: List[SkippedRow] = []
    seen_ids = set()

    def _skip(row: int, reason: str, raw: Optional[str] = None) -> None:
        log.warning(
            f"skipping row {row} of {layer.value} input: {reason}"
            + ("" if raw is None else f" ({raw!r})")
        )
        skipped.append(SkippedRow(row=row, reason=reason, raw=raw))

    parse_programme: Callable[[str], Optional[Programme]] = (
        normalize_programme if layer is Layer.Projects else lambda _: None
    )

    for row, record in enumerate(frame.to_dict(orient="records")):
        doc_id = (
            record[id_column].strip()
            if id_column
            else f"{_ID_PREFIX[layer]}{row + 1:06d}"
        )
        abstract = record[mapping["abstract"]].strip()
        raw_year = record[mapping["year"]]

        if not doc_id:
            _skip(row, CorpusLayer.REASON_MISSING_ID)
            continue

        if not abstract:
            _skip(row, CorpusLayer.REASON_EMPTY_ABSTRACT)
            continue

        year = parse_year(raw_year)
        if year is None:
            _skip(row, CorpusLayer.REASON_INVALID_YEAR, raw_year)
            continue

        programme: Optional[Programme] = None
        if layer is Layer.Projects:
            raw_programme = record[mapping["programme"]]
            programme = parse_programme(raw_programme)
            if programme is None:
                _skip(row, CorpusLayer.REASON_UNKNOWN_PROGRAMME, raw_programme)
                continue

        if doc_id in seen_ids:
            _skip(row, CorpusLayer.REASON_DUPLICATE_ID, doc_id)
            continue
        seen_ids.add(doc_id)

        documents.append(
            Document(
                id=doc_id,
                title=record[title_column].strip() if title_column else "",
                abstract=abstract,
                year=year,
                layer=layer,
                programme=programme,
                extra={column: record[column] for column in extra_columns},
            )
        )

    return documents, tuple(skipped)

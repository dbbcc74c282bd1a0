"""
Time periods used to split a layer by publication year.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from ..api import AllTracker, ConfigurationError, DataError
from ..corpus import CorpusLayer

log = logging.getLogger(__name__)

__all__ = ["Period", "PeriodTable", "split_periods"]

__tracker = AllTracker(globals())


@dataclass(frozen=True)
class Period:
    """
    A labelled range of calendar years.
    """

    #: the label, e.g., ``"AR3"``
    label: str
    #: the first year of the period
    start: int
    #: the last year of the period (inclusive)
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ConfigurationError(
                f"period {self.label} must not end ({self.end}) before it starts "
                f"({self.start})"
            )

    @property
    def span(self) -> str:
        """
        The years of this period, formatted as ``"<start>-<end>"``.
        """
        return f"{self.start}-{self.end}"

    def __contains__(self, year: object) -> bool:
        return isinstance(year, int) and self.start <= year <= self.end


@dataclass(frozen=True)
class PeriodTable:
    """
    An ordered sequence of non-overlapping periods.

    The default table bins years by the cycles of the IPCC assessment reports;
    the end of AR5 is set to 2014, when its last volume was published.
    """

    periods: Tuple[Period, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "periods", tuple(self.periods))
        if not self.periods:
            raise ConfigurationError("a period table requires at least one period")
        labels = [period.label for period in self.periods]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"period labels must be unique: {labels}")
        for previous, current in zip(self.periods[:-1], self.periods[1:]):
            if current.start <= previous.end:
                raise ConfigurationError(
                    f"periods must be ascending and non-overlapping, but "
                    f"{current.label} ({current.span}) starts before the end of "
                    f"{previous.label} ({previous.span})"
                )

    @classmethod
    def default(cls) -> PeriodTable:
        """
        :return: the IPCC assessment report periods AR1 to AR6
        """
        return cls(
            (
                Period("AR1", 1900, 1990),
                Period("AR2", 1991, 1994),
                Period("AR3", 1995, 2000),
                Period("AR4", 2001, 2006),
                Period("AR5", 2007, 2014),
                Period("AR6", 2015, 2021),
            )
        )

    @classmethod
    def from_records(cls, records: Sequence[Mapping[str, Any]]) -> PeriodTable:
        """
        Create a period table from records with keys ``label``, ``start``, ``end``,
        as found in configuration files.

        :param records: the period records, in ascending order
        :return: the period table
        """
        try:
            return cls(
                tuple(
                    Period(str(record["label"]), int(record["start"]), int(record["end"]))
                    for record in records
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"invalid period record: {e}") from e

    def to_records(self) -> List[Dict[str, Any]]:
        """
        :return: the periods as records with keys ``label``, ``start``, ``end``
        """
        return [
            {"label": period.label, "start": period.start, "end": period.end}
            for period in self.periods
        ]

    @property
    def labels(self) -> List[str]:
        """
        The period labels, in order.
        """
        return [period.label for period in self.periods]

    def __iter__(self) -> Iterator[Period]:
        return iter(self.periods)

    def __len__(self) -> int:
        return len(self.periods)

    def period_of(self, year: int) -> Optional[Period]:
        """
        Find the period containing a year.

        :param year: the year
        :return: the period, or ``None`` if no period contains the year
        """
        for period in self.periods:
            if year in period:
                return period
        return None


def split_periods(layer: CorpusLayer, periods: PeriodTable) -> Dict[str, str]:
    """
    Assign each document of a layer to the period containing its year.

    :param layer: the layer
    :param periods: the period table
    :return: a mapping of document ids to period labels, in layer order
    :raise DataError: at least one document's year is outside all periods
    """
    assignment: Dict[str, str] = {}
    outside = set()
    for document in layer.documents:
        period = periods.period_of(document.year)
        if period is None:
            outside.add(document.year)
        else:
            assignment[document.id] = period.label

    if outside:
        raise DataError(
            f"document years are outside all periods: "
            f"{', '.join(map(str, sorted(outside)))}"
        )

    return assignment


__tracker.validate()

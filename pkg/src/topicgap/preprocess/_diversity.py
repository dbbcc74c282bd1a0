"""
Lexical diversity and term frequencies across time periods.
"""
import logging
from collections import Counter
from typing import Dict, Optional, Sequence, Set, Tuple

import pandas as pd

from ..api import AllTracker
from ..corpus import CorpusLayer
from ._periods import PeriodTable, split_periods
from ._tokenize import TokenizerOptions, tokenize_layer

log = logging.getLogger(__name__)

__all__ = ["lexical_diversity", "term_frequencies_by_period"]

#: Columns of the lexical diversity table.
DIVERSITY_COLUMNS = ["period", "label", "new_terms", "new_term_rate", "type_token_ratio"]

__tracker = AllTracker(globals())


def lexical_diversity(
    layer: CorpusLayer,
    periods: PeriodTable,
    tokenizer: Optional[TokenizerOptions] = None,
    *,
    tokens: Optional[Sequence[Sequence[str]]] = None,
    n_jobs: Optional[int] = None,
) -> pd.DataFrame:
    """
    Count the terms each period adds to the lexicon of all earlier periods.

    For each period, in table order:

    - ``new_terms``: the number of distinct terms not occurring in any earlier
      period; for the first period, its number of distinct terms
    - ``new_term_rate``: ``new_terms`` divided by the period's token count
    - ``type_token_ratio``: distinct terms divided by the period's token count

    Rates of periods without tokens are ``NaN``.

    :param layer: the layer
    :param periods: the period table
    :param tokenizer: the tokenizer options; defaults apply if not stated
    :param tokens: the tokens of each document, if already tokenized with the
        tokenizer options
    :param n_jobs: number of parallel jobs for tokenization (default: serial)
    :return: a data frame with columns ``period`` (as ``"<start>-<end>"``),
        ``label``, ``new_terms``, ``new_term_rate``, ``type_token_ratio``, and
        one row per period
    :raise DataError: a document year is outside all periods
    """
    types, totals = _period_terms(layer, periods, tokenizer, tokens, n_jobs)

    rows = []
    seen: Set[str] = set()
    for period in periods:
        period_types = types[period.label]
        n_tokens = sum(totals[period.label].values())
        new_terms = len(period_types - seen)
        seen |= period_types
        rows.append(
            (
                period.span,
                period.label,
                new_terms,
                new_terms / n_tokens if n_tokens else float("nan"),
                len(period_types) / n_tokens if n_tokens else float("nan"),
            )
        )

    return pd.DataFrame(rows, columns=DIVERSITY_COLUMNS)


def term_frequencies_by_period(
    layer: CorpusLayer,
    periods: PeriodTable,
    n: int = 10,
    tokenizer: Optional[TokenizerOptions] = None,
    *,
    tokens: Optional[Sequence[Sequence[str]]] = None,
    n_jobs: Optional[int] = None,
) -> pd.DataFrame:
    """
    List the most frequent terms of each period.

    Ties are broken lexicographically.

    :param layer: the layer
    :param periods: the period table
    :param n: the number of terms per period
    :param tokenizer: the tokenizer options; defaults apply if not stated
    :param tokens: the tokens of each document, if already tokenized with the
        tokenizer options
    :param n_jobs: number of parallel jobs for tokenization (default: serial)
    :return: a data frame with columns ``label``, ``rank``, ``term``, ``count``
    :raise DataError: a document year is outside all periods
    """
    if n < 1:
        raise ValueError(f"arg n must be positive but is {n}")

    _, totals = _period_terms(layer, periods, tokenizer, tokens, n_jobs)

    rows = []
    for period in periods:
        ranked = sorted(totals[period.label].items(), key=lambda item: (-item[1], item[0]))
        rows.extend(
            (period.label, rank, term, count)
            for rank, (term, count) in enumerate(ranked[:n], start=1)
        )

    return pd.DataFrame(rows, columns=["label", "rank", "term", "count"])


__tracker.validate()


def _period_terms(
    layer: CorpusLayer,
    periods: PeriodTable,
    tokenizer: Optional[TokenizerOptions],
    tokens: Optional[Sequence[Sequence[str]]],
    n_jobs: Optional[int],
) -> Tuple[Dict[str, Set[str]], Dict[str, "Counter[str]"]]:
    assignment = split_periods(layer, periods)
    if tokens is None:
        tokens = tokenize_layer(layer, tokenizer, n_jobs=n_jobs)

    types: Dict[str, Set[str]] = {label: set() for label in periods.labels}
    totals: Dict[str, Counter[str]] = {label: Counter() for label in periods.labels}
    for document, document_tokens in zip(layer.documents, tokens):
        label = assignment[document.id]
        types[label].update(document_tokens)
        totals[label].update(document_tokens)

    return types, totals

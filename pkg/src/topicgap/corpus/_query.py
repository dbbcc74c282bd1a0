"""
A boolean keyword query language for filtering corpus layers.

Grammar, in order of increasing precedence::

    query    := and_expr ("OR" and_expr)*
    and_expr := not_expr ("AND" not_expr)*
    not_expr := "NOT" not_expr | operand
    operand  := '"' words '"' | stem "*" | word | "(" query ")"

Operators are upper case; all other words are terms and match case-insensitively.
A word containing hyphens or apostrophes is a phrase of its alphanumeric parts.
"""
from __future__ import annotations

import logging
import re
from abc import ABCMeta
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import pyparsing as pp

from ..api import AllTracker, ConfigurationError
from ._document import CorpusLayer, Document

log = logging.getLogger(__name__)

__all__ = [
    "QueryParseError",
    "QueryAst",
    "Term",
    "Phrase",
    "Prefix",
    "And",
    "Or",
    "Not",
    "document_tokens",
    "parse_query",
    "serialize_query",
    "match_query",
    "filter_layer",
]

_RE_TOKEN = re.compile(r"[^\W_]+")

__tracker = AllTracker(globals())


class QueryParseError(ConfigurationError):
    """
    Raised when a query string does not conform to the query grammar.
    """

    #: UTF-8 byte offset into the query text where the error was detected
    offset: int

    #: the query text
    text: str

    def __init__(self, message: str, *, offset: int, text: str) -> None:
        super().__init__(f"{message} (at byte offset {offset} of query {text!r})")
        self.offset = offset
        self.text = text


class QueryAst(metaclass=ABCMeta):
    """
    A node of a query syntax tree.
    """


@dataclass(frozen=True)
class Term(QueryAst):
    """
    Matches documents containing the word as a token.
    """

    word: str


@dataclass(frozen=True)
class Phrase(QueryAst):
    """
    Matches documents containing the words as a contiguous run of tokens.
    """

    words: Tuple[str, ...]


@dataclass(frozen=True)
class Prefix(QueryAst):
    """
    Matches documents containing a token starting with the stem.
    """

    stem: str


@dataclass(frozen=True)
class And(QueryAst):
    """
    Matches documents matched by all children.
    """

    children: Tuple[QueryAst, ...]


@dataclass(frozen=True)
class Or(QueryAst):
    """
    Matches documents matched by at least one child.
    """

    children: Tuple[QueryAst, ...]


@dataclass(frozen=True)
class Not(QueryAst):
    """
    Matches documents not matched by the child.
    """

    child: QueryAst
    #: character position of the ``NOT`` keyword in the parsed text, if parsed
    position: Optional[int] = field(default=None, compare=False, repr=False)


def document_tokens(text: str) -> List[str]:
    """
    Split text into the lowercase alphanumeric tokens seen by the query matcher.

    :param text: the text to split
    :return: the tokens, in text order
    """
    return _RE_TOKEN.findall(text.lower())


def parse_query(text: str) -> QueryAst:
    """
    Parse a query string into its canonical syntax tree.

    ``AND`` and ``OR`` nodes are flattened, so ``a AND (b AND c)`` and
    ``(a AND b) AND c`` produce the same tree.
    A ``NOT`` is only accepted as an operand of an ``AND`` with at least one
    operand that is not negated.

    :param text: the query string
    :return: the syntax tree
    :raise QueryParseError: the query is not in the grammar, or is not satisfiable
        by construction
    """
    if not text.strip():
        raise QueryParseError("query is empty", offset=0, text=text)

    try:
        ast: QueryAst = _QUERY.parse_string(text, parse_all=True)[0]
    except pp.ParseBaseException as e:
        raise QueryParseError(
            e.msg, offset=_byte_offset(text, e.loc), text=text
        ) from None

    if isinstance(ast, Not):
        raise _not_error(text, ast, "NOT requires a positive operand joined by AND")

    return ast


def serialize_query(ast: QueryAst) -> str:
    """
    Render a syntax tree as query text.

    Parsing the result yields the same tree for every canonical tree.

    :param ast: the syntax tree
    :return: the query text
    """
    if isinstance(ast, Term):
        return ast.word
    elif isinstance(ast, Phrase):
        return '"' + " ".join(ast.words) + '"'
    elif isinstance(ast, Prefix):
        return ast.stem + "*"
    elif isinstance(ast, And):
        return " AND ".join(
            f"({serialize_query(child)})"
            if isinstance(child, (And, Or))
            else serialize_query(child)
            for child in ast.children
        )
    elif isinstance(ast, Or):
        return " OR ".join(
            f"({serialize_query(child)})" if isinstance(child, Or) else serialize_query(child)
            for child in ast.children
        )
    elif isinstance(ast, Not):
        operand = serialize_query(ast.child)
        if isinstance(ast.child, (And, Or, Not)):
            operand = f"({operand})"
        return "NOT " + operand
    else:
        raise TypeError(f"arg ast must be a query node but is a {type(ast).__name__}")


def match_query(q: QueryAst, d: Union[Document, str]) -> bool:
    """
    Test whether a document matches a query.

    Documents are matched on their title and abstract, case-insensitively.

    :param q: the query
    :param d: the document, or a text to match against
    :return: ``True`` if the document matches the query
    """
    tokens = document_tokens(d if isinstance(d, str) else d.text)
    return _evaluate(q, tokens, frozenset(tokens))


def filter_layer(layer: CorpusLayer, q: QueryAst) -> CorpusLayer:
    """
    Keep the documents of a layer matching a query, in their original order.

    :param layer: the layer to filter
    :param q: the query
    :return: a new layer with the matching documents
    """
    kept = []
    for document in layer.documents:
        tokens = document_tokens(document.text)
        if _evaluate(q, tokens, frozenset(tokens)):
            kept.append(document)

    log.info(
        f"{layer.layer.value} layer filtered: kept {len(kept)}, "
        f"dropped {len(layer) - len(kept)} documents"
    )
    if not kept:
        log.warning(
            f"query {serialize_query(q)!r} matched no documents "
            f"of the {layer.layer.value} layer"
        )

    return layer.with_documents(kept)


__tracker.validate()


#
# evaluation
#


def _evaluate(q: QueryAst, tokens: Sequence[str], token_set: FrozenSet[str]) -> bool:
    if isinstance(q, Term):
        return q.word in token_set
    elif isinstance(q, Prefix):
        return any(token.startswith(q.stem) for token in token_set)
    elif isinstance(q, Phrase):
        n = len(q.words)
        if not all(word in token_set for word in q.words):
            return False
        return any(
            tuple(tokens[i : i + n]) == q.words for i in range(len(tokens) - n + 1)
        )
    elif isinstance(q, And):
        return all(_evaluate(child, tokens, token_set) for child in q.children)
    elif isinstance(q, Or):
        return any(_evaluate(child, tokens, token_set) for child in q.children)
    elif isinstance(q, Not):
        return not _evaluate(q.child, tokens, token_set)
    else:
        raise TypeError(f"arg q must be a query node but is a {type(q).__name__}")


#
# grammar
#


def _byte_offset(text: str, loc: int) -> int:
    return len(text[:loc].encode("utf-8"))


def _not_error(text: str, node: Not, message: str) -> QueryParseError:
    return QueryParseError(
        message, offset=_byte_offset(text, node.position or 0), text=text
    )


def _flatten(
    node_type: type, children: Iterable[QueryAst]
) -> List[QueryAst]:
    flat: List[QueryAst] = []
    for child in children:
        if isinstance(child, node_type):
            flat.extend(child.children)  # type: ignore[attr-defined]
        else:
            flat.append(child)
    return flat


def _word_action(tokens: pp.ParseResults) -> QueryAst:
    parts = document_tokens(tokens[0])
    return Term(parts[0]) if len(parts) == 1 else Phrase(tuple(parts))


def _quoted_action(text: str, loc: int, tokens: pp.ParseResults) -> QueryAst:
    parts = document_tokens(tokens[0])
    if not parts:
        raise pp.ParseFatalException(text, loc, "phrase contains no words")
    return Term(parts[0]) if len(parts) == 1 else Phrase(tuple(parts))


def _not_action(text: str, loc: int, tokens: pp.ParseResults) -> QueryAst:
    child = tokens[0]
    if isinstance(child, Not):
        raise pp.ParseFatalException(
            text, child.position or loc, "NOT cannot be applied to a negation"
        )
    return Not(child, position=loc)


def _and_action(text: str, loc: int, tokens: pp.ParseResults) -> QueryAst:
    children = _flatten(And, tokens)
    if len(children) == 1:
        return children[0]
    if all(isinstance(child, Not) for child in children):
        raise pp.ParseFatalException(
            text, loc, "AND requires at least one operand that is not negated"
        )
    return And(tuple(children))


def _or_action(text: str, loc: int, tokens: pp.ParseResults) -> QueryAst:
    children = _flatten(Or, tokens)
    if len(children) == 1:
        return children[0]
    for child in children:
        if isinstance(child, Not):
            raise pp.ParseFatalException(
                text,
                child.position or loc,
                "NOT requires a positive operand joined by AND",
            )
    return Or(tuple(children))


def _grammar() -> pp.ParserElement:
    and_, or_, not_ = pp.Keyword.using_each(["AND", "OR", "NOT"])
    keyword = and_ | or_ | not_
    lpar, rpar = pp.Suppress.using_each("()")

    query = pp.Forward().set_name("query")

    prefix = (
        pp.Regex(r"[^\W_]+\*")
        .set_name("prefix")
        .set_parse_action(lambda t: Prefix(t[0][:-1].lower()))
    )
    word = (
        pp.Regex(r"[^\W_]+(?:['\-][^\W_]+)*")
        .set_name("word")
        .set_parse_action(_word_action)
    )
    quoted = pp.QuotedString('"').set_name("phrase").set_parse_action(_quoted_action)

    operand = quoted | (~keyword + (prefix | word)) | (lpar + query + rpar)

    not_expr = pp.Forward().set_name("negation")
    not_expr <<= (pp.Suppress(not_) + not_expr).set_parse_action(
        _not_action
    ) | operand

    and_expr = (not_expr + pp.ZeroOrMore(pp.Suppress(and_) + not_expr)).set_parse_action(
        _and_action
    )
    or_expr = (and_expr + pp.ZeroOrMore(pp.Suppress(or_) + and_expr)).set_parse_action(
        _or_action
    )
    query <<= or_expr

    return query


_QUERY = _grammar()

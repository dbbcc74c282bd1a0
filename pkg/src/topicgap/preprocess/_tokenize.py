"""
Tokenization of document text.
"""
import logging
import re
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

from nltk.stem.porter import PorterStemmer

from ..api import AllTracker, ConfigurationError, stable_hash
from ..corpus import CorpusLayer
from ..parallelization import Job, JobRunner, chunk_ranges

log = logging.getLogger(__name__)

__all__ = [
    "TokenizerOptions",
    "Tokenizer",
    "builtin_stopwords",
    "tokenize",
    "tokenize_layer",
]

_RE_ALPHANUMERIC = re.compile(r"[^\W_]+")
_STOPWORDS_PATH = Path(__file__).parent / "data" / "stopwords_en.txt"

__tracker = AllTracker(globals())


@dataclass(frozen=True)
class TokenizerOptions:
    """
    Options controlling how text is split into tokens.

    Two vocabularies can only be compared if they were built with equal options;
    :meth:`.options_hash` identifies a set of options.
    """

    #: if ``True``, convert text to lower case before tokenizing
    lowercase: bool = True
    #: minimum length of a token, in characters, before stemming
    min_len: int = 3
    #: if ``True``, remove the words of the built-in English stopword list
    builtin_stopwords: bool = True
    #: additional words to remove
    extra_stopwords: Tuple[str, ...] = field(default=())
    #: if ``True``, reduce tokens to their stem using the Porter algorithm
    stemming: bool = True

    def __post_init__(self) -> None:
        if self.min_len < 1:
            raise ConfigurationError(
                f"arg min_len must be positive but is {self.min_len}"
            )
        # accept lists from configuration files
        object.__setattr__(self, "extra_stopwords", tuple(self.extra_stopwords))

    def stopwords(self) -> FrozenSet[str]:
        """
        :return: the set of words removed by these options
        """
        words = set(builtin_stopwords()) if self.builtin_stopwords else set()
        words.update(word.lower() for word in self.extra_stopwords)
        return frozenset(words)

    def options_hash(self) -> str:
        """
        Identify these options, including the contents of the stopword list in use.

        :return: a SHA-256 hex digest
        """
        options = asdict(self)
        options["extra_stopwords"] = sorted(self.extra_stopwords)
        options["stopword_list"] = stable_hash(sorted(self.stopwords()))
        return stable_hash(options)


class Tokenizer:
    """
    Splits text into tokens according to a set of :class:`.TokenizerOptions`.

    Tokens are maximal runs of letters and digits.
    Stems are cached, so one tokenizer should be reused for many documents.
    """

    def __init__(self, options: Optional[TokenizerOptions] = None) -> None:
        """
        :param options: the tokenizer options; defaults apply if not stated
        """
        self.options = options or TokenizerOptions()
        self._stopwords = self.options.stopwords()
        self._stemmer = (
            PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
            if self.options.stemming
            else None
        )
        self._stems: Dict[str, str] = {}

    def __call__(self, text: str) -> List[str]:
        """
        Tokenize a text.

        :param text: the text
        :return: the tokens, in text order
        """
        options = self.options
        if options.lowercase:
            text = text.lower()

        tokens = [
            token
            for token in _RE_ALPHANUMERIC.findall(text)
            if len(token) >= options.min_len and token.lower() not in self._stopwords
        ]

        if self._stemmer is None:
            return tokens
        else:
            return [self._stem(token) for token in tokens]

    def _stem(self, token: str) -> str:
        stem = self._stems.get(token)
        if stem is None:
            assert self._stemmer is not None
            stem = self._stems[token] = self._stemmer.stem(token, to_lowercase=False)
        return stem


@lru_cache(maxsize=None)
def builtin_stopwords() -> FrozenSet[str]:
    """
    Load the built-in English stopword list.

    :return: the stopwords
    """
    lines = _STOPWORDS_PATH.read_text(encoding="utf-8").splitlines()
    return frozenset(
        line.strip() for line in lines if line.strip() and not line.startswith("#")
    )


def tokenize(text: str, options: Optional[TokenizerOptions] = None) -> List[str]:
    """
    Tokenize a single text.

    Tokens are maximal runs of letters and digits, optionally lower-cased, at least
    ``min_len`` characters long, not in the stopword list, and optionally
    Porter-stemmed.

    :param text: the text
    :param options: the tokenizer options; defaults apply if not stated
    :return: the tokens, in text order
    """
    return Tokenizer(options)(text)


def tokenize_layer(
    layer: CorpusLayer,
    options: Optional[TokenizerOptions] = None,
    *,
    n_jobs: Optional[int] = None,
) -> List[List[str]]:
    """
    Tokenize the title and abstract of every document in a layer.

    Documents are tokenized in contiguous chunks, in parallel threads if
    ``n_jobs`` is greater than 1; the result does not depend on ``n_jobs``.

    :param layer: the layer to tokenize
    :param options: the tokenizer options; defaults apply if not stated
    :param n_jobs: number of parallel jobs (default: serial)
    :return: the tokens of each document, in layer order
    """
    texts = [document.text for document in layer.documents]
    n_chunks = max(n_jobs or 1, 1)

    @Job.delayed
    def _tokenize_chunk(chunk: range) -> List[List[str]]:
        tokenizer = Tokenizer(options)
        return [tokenizer(texts[i]) for i in chunk]

    runner = JobRunner(n_jobs=n_jobs or 1, shared_memory=True)
    chunks = runner.run_jobs(
        _tokenize_chunk(chunk) for chunk in chunk_ranges(len(texts), n_chunks)
    )
    return [tokens for chunk in chunks for tokens in chunk]


__tracker.validate()

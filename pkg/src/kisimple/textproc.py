"""Tokenization, sentence splitting, syllables and heuristic entities.

Every reward component consumes :class:`TokenizedText`; keeping this layer
deterministic is what makes the scores reproducible.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from ._kernels import count_syllables as _count_syllables
from .errors import EmptyInput

__all__ = [
    "Kind",
    "Token",
    "TokenizedText",
    "StopwordList",
    "EntitySet",
    "tokenize",
    "count_syllables",
    "extract_entities",
    "default_stopwords",
    "load_word_list",
]

# letters (with inner apostrophes), numbers (with inner separators), any other char
_TOKEN_RE = re.compile(
    r"(?P<word>[^\W\d_]+(?:['’][^\W\d_]+)*)"
    r"|(?P<number>\d+(?:[.,:/]\d+)*)"
    r"|(?P<punct>\S)"
)
_TERMINALS = frozenset(".!?")
_CLOSERS = frozenset("\"')]}”’")
_OPENERS = frozenset("\"'([{“‘")
_POSSESSIVE_RE = re.compile(r"['’]s$")


class Kind(str, Enum):
    WORD = "word"
    NUMBER = "number"
    PUNCTUATION = "punctuation"


@dataclass(frozen=True)
class Token:
    surface: str
    lower: str
    kind: Kind
    syllables: int
    is_stopword: bool
    is_capitalized: bool
    is_sentence_initial: bool
    start: int
    end: int

    @property
    def is_wordlike(self) -> bool:
        """Counted as a word by FKGL and compression (words and numbers)."""
        return self.kind is not Kind.PUNCTUATION


@dataclass(frozen=True)
class TokenizedText:
    raw: str
    tokens: tuple[Token, ...]
    sentences: tuple[tuple[int, int], ...]  # half-open token index ranges

    def __len__(self) -> int:
        return len(self.tokens)

    def sentence_tokens(self):
        for lo, hi in self.sentences:
            yield self.tokens[lo:hi]

    @property
    def word_count(self) -> int:
        return sum(1 for t in self.tokens if t.is_wordlike)

    def lowers(self) -> list[str]:
        return [t.lower for t in self.tokens]


class StopwordList(frozenset):
    """Casefolded function words; the complement defines content words."""

    def __new__(cls, words: Iterable[str]):
        words = [w.strip().casefold() for w in words]
        obj = super().__new__(cls, (w for w in words if w))
        if not obj:
            raise ValueError("stopword list is empty")
        return obj

    @classmethod
    def load(cls, path) -> "StopwordList":
        return cls(load_word_list(Path(path).read_text(encoding="utf-8")))


class EntitySet(frozenset):
    """Set of normalized entity spans (casefolded, whitespace collapsed)."""

    def __new__(cls, spans: Iterable[str] = ()):
        return super().__new__(cls, (normalize_entity(s) for s in spans))

    def __repr__(self) -> str:
        return f"EntitySet({sorted(self)!r})"


def normalize_entity(span: str) -> str:
    span = " ".join(span.split()).casefold()
    return _POSSESSIVE_RE.sub("", span)


def load_word_list(text: str) -> list[str]:
    """Parse a one-word-per-line file body; ``#`` starts a comment."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _bundled(name: str) -> str:
    return resources.files("kisimple").joinpath("data", name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def default_stopwords() -> StopwordList:
    return StopwordList(load_word_list(_bundled("stopwords.txt")))


@lru_cache(maxsize=None)
def _abbreviations() -> frozenset:
    return frozenset(w.casefold() for w in load_word_list(_bundled("abbreviations.txt")))


def count_syllables(word: str) -> int:
    """Vowel-group syllable estimate.

    Contiguous runs of ``aeiouy`` are counted; a terminal silent ``e``
    removes one group (never below one), and a terminal consonant + ``le``
    adds one back. Non-letters should be stripped by the caller.
    """
    return _count_syllables(word)


def _is_break(toks: list[tuple[str, Kind, int, int]], i: int) -> Optional[int]:
    """If a sentence ends at token ``i``, return the index of its last token."""
    surface = toks[i][0]
    if surface not in _TERMINALS:
        return None
    j = i
    # absorb '?!', '...' and closing quotes glued to the terminal mark
    while j + 1 < len(toks) and toks[j + 1][2] == toks[j][3] and (
        toks[j + 1][0] in _TERMINALS or toks[j + 1][0] in _CLOSERS
    ):
        j += 1
    if j + 1 == len(toks):
        return j
    if toks[j + 1][2] == toks[j][3]:
        return None
    k = j + 1
    while k + 1 < len(toks) and toks[k][0] in _OPENERS:
        k += 1
    if not toks[k][0][0].isupper():
        return None
    if surface == "." and i > 0 and toks[i - 1][3] == toks[i][2]:
        prev = toks[i - 1]
        if prev[1] is Kind.WORD and (
            prev[0].casefold() in _abbreviations() or (len(prev[0]) == 1 and prev[0].isupper())
        ):
            return None
    return j


def tokenize(raw: str, stopwords: Optional[StopwordList] = None) -> TokenizedText:
    """Split ``raw`` into sentences and tokens.

    Sentences end at ``.``, ``!`` or ``?`` (plus any glued closing quotes)
    when followed by whitespace and a capitalized token, unless the period
    closes a known abbreviation or a single-letter initial.
    """
    if not raw or raw.isspace():
        raise EmptyInput("text is empty or whitespace-only")
    if stopwords is None:
        stopwords = default_stopwords()

    spans = []
    for m in _TOKEN_RE.finditer(raw):
        kind = Kind(m.lastgroup if m.lastgroup != "punct" else "punctuation")
        spans.append((m.group(), kind, m.start(), m.end()))

    sentences = []
    lo = 0
    i = 0
    while i < len(spans):
        end = _is_break(spans, i)
        if end is not None:
            sentences.append((lo, end + 1))
            lo = end + 1
            i = end + 1
        else:
            i += 1
    if lo < len(spans):
        sentences.append((lo, len(spans)))

    tokens = []
    for lo, hi in sentences:
        seen_first = False
        for surface, kind, start, end in spans[lo:hi]:
            lower = surface.casefold()
            initial = False
            if kind is not Kind.PUNCTUATION and not seen_first:
                initial = seen_first = True
            if kind is Kind.WORD:
                letters = "".join(c for c in lower if c.isalpha())
                syl = count_syllables(letters)
            elif kind is Kind.NUMBER:
                syl = 1
            else:
                syl = 0
            tokens.append(Token(
                surface=surface,
                lower=lower,
                kind=kind,
                syllables=syl,
                is_stopword=kind is Kind.WORD and lower in stopwords,
                is_capitalized=surface[0].isupper(),
                is_sentence_initial=initial,
                start=start,
                end=end,
            ))
    return TokenizedText(raw=raw, tokens=tuple(tokens), sentences=tuple(sentences))


def _qualifies(tok: Token, lexicon) -> bool:
    if tok.kind is Kind.NUMBER:
        return True
    if tok.kind is not Kind.WORD or not tok.is_capitalized or tok.is_stopword:
        return False
    if not tok.is_sentence_initial:
        return True
    return normalize_entity(tok.lower) not in lexicon


def extract_entities(doc: TokenizedText, lexicon) -> EntitySet:
    """Heuristic named entities: maximal runs of qualifying tokens.

    A token qualifies when it is a number, a capitalized word that does
    not open its sentence, or a sentence-opening capitalized word missing
    from ``lexicon``. Capitalized stopwords ("I", "The") never qualify.
    Runs do not cross sentence boundaries.
    """
    spans = []
    for lo, hi in doc.sentences:
        run_start = None
        for i in range(lo, hi + 1):
            ok = i < hi and _qualifies(doc.tokens[i], lexicon)
            if ok and run_start is None:
                run_start = i
            elif not ok and run_start is not None:
                a, b = doc.tokens[run_start], doc.tokens[i - 1]
                spans.append(doc.raw[a.start:b.end])
                run_start = None
    return EntitySet(spans)

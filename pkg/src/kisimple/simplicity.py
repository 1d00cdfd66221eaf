"""Syntactic (FKGL ramp) and lexical (Zipf shift ramp) simplicity scores."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import NoWords
from .textproc import Kind, TokenizedText

__all__ = [
    "ZipfTable",
    "SimplicityConfig",
    "default_lexicon",
    "content_words",
    "fkgl",
    "target_delta",
    "ramp",
    "s_score",
    "s_score_from_grades",
    "delta_z",
    "l_score",
]

ZIPF_MIN, ZIPF_MAX = 0.0, 8.0


class ZipfTable:
    """Immutable lowercase word -> Zipf frequency lookup on ``[0, 8]``.

    Absent words look up as 0, the value for a word never seen in the
    frequency corpus.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[str, float]):
        table = {}
        for word, value in entries.items():
            value = float(value)
            if not (ZIPF_MIN <= value <= ZIPF_MAX):
                raise ValueError(f"zipf value for {word!r} outside [0, 8]: {value}")
            table[word.casefold()] = value
        self._entries = table

    @classmethod
    def from_tsv(cls, text: str) -> "ZipfTable":
        entries = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                word, value = line.rstrip("\n").split("\t")
                entries[word] = float(value)
            except ValueError:
                raise ValueError(f"line {lineno}: expected 'word<TAB>zipf', got {line!r}") from None
        return cls(entries)

    @classmethod
    def load(cls, path) -> "ZipfTable":
        return cls.from_tsv(Path(path).read_text(encoding="utf-8"))

    def __getitem__(self, word: str) -> float:
        return self._entries.get(word, 0.0)

    def __contains__(self, word) -> bool:
        return word in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, word: str, default: float = 0.0) -> float:
        return self._entries.get(word, default)


@lru_cache(maxsize=None)
def default_lexicon() -> ZipfTable:
    text = resources.files("kisimple").joinpath("data", "zipf_en.tsv").read_text(encoding="utf-8")
    return ZipfTable.from_tsv(text)


@dataclass(frozen=True)
class SimplicityConfig:
    target_zipf_shift: float = 0.4
    # target FKGL drop, piecewise linear in the starting grade
    low_knee: float = 4.0
    low_target: float = 0.1
    mid_slope: float = 0.5
    mid_intercept: float = -1.9
    high_knee: float = 12.0
    high_slope: float = 0.8
    high_intercept: float = -5.6

    def __post_init__(self):
        if not self.target_zipf_shift > 0:
            raise ValueError("target_zipf_shift must be positive")


DEFAULT_SIMPLICITY = SimplicityConfig()


def content_words(doc: TokenizedText) -> frozenset:
    """Casefolded word tokens minus stopwords; numbers and punctuation excluded."""
    return frozenset(t.lower for t in doc.tokens if t.kind is Kind.WORD and not t.is_stopword)


def fkgl(doc: TokenizedText) -> float:
    """Flesch-Kincaid grade level.

    Words are word and number tokens; numbers count as one syllable.
    """
    words = 0
    syllables = 0
    for t in doc.tokens:
        if t.kind is not Kind.PUNCTUATION:
            words += 1
            syllables += t.syllables
    if words == 0:
        raise NoWords("text has no word tokens")
    # sentences holding only punctuation do not count
    sentences = sum(
        1 for sent in doc.sentence_tokens() if any(t.kind is not Kind.PUNCTUATION for t in sent)
    )
    return 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59


def target_delta(f_start: float, cfg: SimplicityConfig = DEFAULT_SIMPLICITY) -> float:
    if f_start < cfg.low_knee:
        return cfg.low_target
    if f_start < cfg.high_knee:
        return cfg.mid_slope * f_start + cfg.mid_intercept
    return cfg.high_slope * f_start + cfg.high_intercept


def ramp(achieved: float, target: float) -> float:
    """``clip(1 - |achieved - target| / target, 0, 1)``."""
    return min(1.0, max(0.0, 1.0 - abs(achieved - target) / target))


def s_score_from_grades(f_start: float, f_end: float, cfg: SimplicityConfig = DEFAULT_SIMPLICITY) -> float:
    # symmetric ramp on the achieved grade drop; overshooting is penalized too
    return ramp(f_start - f_end, target_delta(f_start, cfg))


def s_score(original: TokenizedText, simplified: TokenizedText,
            cfg: SimplicityConfig = DEFAULT_SIMPLICITY) -> float:
    return s_score_from_grades(fkgl(original), fkgl(simplified), cfg)


def _mean_zipf(words: Iterable[str], table: ZipfTable) -> float:
    words = sorted(words)
    if not words:
        return 0.0
    return math.fsum(table[w] for w in words) / len(words)


def delta_z(w1: frozenset, w2: frozenset, table: ZipfTable) -> float:
    """Mean Zipf of inserted words minus mean Zipf of deleted words."""
    w1, w2 = frozenset(w1), frozenset(w2)
    return _mean_zipf(w2 - w1, table) - _mean_zipf(w1 - w2, table)


def l_score(w1: frozenset, w2: frozenset, table: ZipfTable,
            cfg: SimplicityConfig = DEFAULT_SIMPLICITY) -> float:
    return ramp(delta_z(w1, w2, table), cfg.target_zipf_shift)

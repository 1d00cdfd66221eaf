"""Salience: mask every content word of the original, then measure how many
of the blanks the simplified text lets a cloze model recover."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from .errors import NoMaskableTokens
from .textproc import Kind, StopwordList, TokenizedText, default_stopwords

__all__ = ["MaskedDoc", "CoverageModel", "CopyCloze", "mask", "mask_rate", "coverage"]

_SUFFIXES = ("ing", "es", "ed", "s")
_MIN_STEM = 2


@dataclass(frozen=True)
class MaskedDoc:
    doc: TokenizedText
    masked_positions: tuple[int, ...]

    def masked_words(self) -> list[str]:
        return [self.doc.tokens[i].lower for i in self.masked_positions]


class CoverageModel(Protocol):
    def fill_accuracy(self, masked: MaskedDoc, evidence: TokenizedText) -> float:
        """Fraction of blanks in ``masked`` filled correctly given ``evidence``."""


def word_forms(word: str) -> set[str]:
    """The word plus each variant with one inflectional suffix removed."""
    forms = {word}
    for suf in _SUFFIXES:
        if word.endswith(suf) and len(word) - len(suf) >= _MIN_STEM:
            forms.add(word[: -len(suf)])
    return forms


class CopyCloze:
    """Lexical-recoverability cloze: a blank counts as filled when the masked
    word, or a one-suffix-stripped form of it, matches a form of some content
    token in the evidence text."""

    def fill_accuracy(self, masked: MaskedDoc, evidence: TokenizedText) -> float:
        if not masked.masked_positions:
            raise NoMaskableTokens("nothing to fill")
        available = set()
        for t in evidence.tokens:
            if t.kind is not Kind.PUNCTUATION and not t.is_stopword:
                available |= word_forms(t.lower)
        hits = sum(1 for w in masked.masked_words() if word_forms(w) & available)
        return hits / len(masked.masked_positions)


def mask(doc: TokenizedText, stopwords: Optional[StopwordList] = None) -> MaskedDoc:
    """Mask every word or number token whose casefolded form is not a stopword."""
    if stopwords is None:
        stopwords = default_stopwords()
    positions = tuple(
        i for i, t in enumerate(doc.tokens)
        if t.kind is not Kind.PUNCTUATION and t.lower not in stopwords
    )
    return MaskedDoc(doc, positions)


def mask_rate(doc: TokenizedText, stopwords: Optional[StopwordList] = None) -> float:
    """Masked tokens over all tokens, punctuation included."""
    return len(mask(doc, stopwords).masked_positions) / len(doc.tokens)


def coverage(original: TokenizedText, simplified: TokenizedText,
             model: Optional[CoverageModel] = None,
             stopwords: Optional[StopwordList] = None) -> float:
    masked = mask(original, stopwords)
    if not masked.masked_positions:
        raise NoMaskableTokens("original has no content words to mask")
    if model is None:
        model = CopyCloze()
    return model.fill_accuracy(masked, simplified)

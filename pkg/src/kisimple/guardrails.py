"""Binary guardrails: brevity (compression band) and inaccuracy (novel entities)."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import NoWords
from .textproc import EntitySet, TokenizedText

__all__ = ["Verdict", "BrevityBounds", "GuardrailVerdict", "brevity", "brevity_verdict",
           "inaccuracy", "check"]


class Verdict(str, Enum):
    PASS = "pass"
    TRIGGER = "trigger"

    @property
    def passed(self) -> bool:
        return self is Verdict.PASS


@dataclass(frozen=True)
class BrevityBounds:
    c_min: float = 0.6
    c_max: float = 1.5

    def __post_init__(self):
        if not 0 < self.c_min <= self.c_max:
            raise ValueError(f"need 0 < c_min <= c_max, got [{self.c_min}, {self.c_max}]")


@dataclass(frozen=True)
class GuardrailVerdict:
    brevity: Verdict
    inaccuracy: Verdict
    compression: float
    novel_entities: EntitySet

    @property
    def passed(self) -> bool:
        return self.brevity.passed and self.inaccuracy.passed


def brevity_verdict(compression: float, bounds: BrevityBounds = BrevityBounds()) -> Verdict:
    return Verdict.PASS if bounds.c_min <= compression <= bounds.c_max else Verdict.TRIGGER


def brevity(original: TokenizedText, simplified: TokenizedText,
            bounds: BrevityBounds = BrevityBounds()) -> tuple[Verdict, float]:
    """Word-count compression ratio and its verdict (bounds inclusive)."""
    n1 = original.word_count
    if n1 == 0:
        raise NoWords("original has no words")
    c = simplified.word_count / n1
    return brevity_verdict(c, bounds), c


def inaccuracy(e1: EntitySet, e2: EntitySet) -> tuple[Verdict, EntitySet]:
    """Trigger when the output mentions an entity absent from the original.

    Spans compare whole: "paz" does not match "la paz".
    """
    novel = EntitySet(frozenset(e2) - frozenset(e1))
    return (Verdict.TRIGGER if novel else Verdict.PASS), novel


def check(original: TokenizedText, simplified: TokenizedText, e1: EntitySet, e2: EntitySet,
          bounds: BrevityBounds = BrevityBounds()) -> GuardrailVerdict:
    b, c = brevity(original, simplified, bounds)
    i, novel = inaccuracy(e1, e2)
    return GuardrailVerdict(brevity=b, inaccuracy=i, compression=c, novel_entities=novel)

"""Desk-scale trainable policy: per-word softmax over lexical substitutions."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .kscst import Candidate
from .reward import ScoreConfig, score_pair
from .textproc import Kind, TokenizedText, tokenize

__all__ = [
    "ToyLexicalPolicy",
    "parse_substitutions",
    "load_substitutions",
    "bundled_substitutions",
    "bundled_toy_inputs",
    "KisRewardFn",
]


def parse_substitutions(text: str) -> dict:
    """Parse ``complex<TAB>cand1,cand2,...`` lines; the complex word leads each option list."""
    table = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            word, cands = line.split("\t")
        except ValueError:
            raise ValueError(f"line {lineno}: expected 'complex<TAB>candidates'") from None
        word = word.casefold()
        opts = [word] + [c.strip().casefold() for c in cands.split(",") if c.strip()]
        table[word] = tuple(dict.fromkeys(opts))
    return table


def load_substitutions(path) -> dict:
    return parse_substitutions(Path(path).read_text(encoding="utf-8"))


def _data(name: str) -> str:
    return resources.files("kisimple").joinpath("data", name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _bundled_table() -> tuple:
    return tuple(parse_substitutions(_data("substitutions.tsv")).items())


def bundled_substitutions() -> dict:
    return dict(_bundled_table())


def bundled_toy_inputs() -> list:
    return [tokenize(line) for line in _data("toy_inputs.txt").splitlines() if line.strip()]


def _match_case(word: str, like: str) -> str:
    if like.isupper() and len(like) > 1:
        return word.upper()
    if like[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


class ToyLexicalPolicy:
    """Independent softmax choice for each occurrence of a known complex word.

    Parameters are one logit per (complex word, option); option 0 keeps the
    original word. Every decision is a categorical draw, so the log-prob
    gradient of option ``c`` is ``onehot(c) - softmax(logits)`` on that
    word's slice.
    """

    def __init__(self, table: Mapping[str, Sequence[str]], params: Optional[np.ndarray] = None):
        self.options = {w: tuple(opts) for w, opts in sorted(table.items())}
        self.slices = {}
        start = 0
        for w, opts in self.options.items():
            self.slices[w] = slice(start, start + len(opts))
            start += len(opts)
        self.params = np.zeros(start) if params is None else np.array(params, dtype=np.float64)
        if self.params.shape != (start,):
            raise ValueError(f"expected {start} parameters, got {self.params.shape}")

    def probs(self, word: str) -> np.ndarray:
        z = self.params[self.slices[word]]
        e = np.exp(z - z.max())
        return e / e.sum()

    def decisions(self, doc: TokenizedText) -> list:
        return [i for i, t in enumerate(doc.tokens) if t.kind is Kind.WORD and t.lower in self.options]

    def render(self, doc: TokenizedText, choices: dict) -> str:
        """Rebuild ``doc.raw`` with token ``i`` replaced by ``choices[i]``."""
        parts = []
        pos = 0
        for i in sorted(choices):
            t = doc.tokens[i]
            parts.append(doc.raw[pos:t.start])
            parts.append(_match_case(choices[i], t.surface))
            pos = t.end
        parts.append(doc.raw[pos:])
        return "".join(parts)

    def _build(self, doc, picks) -> Candidate:
        grad = np.zeros_like(self.params)
        logps = []
        words = []
        choices = {}
        for i, c in picks:
            w = doc.tokens[i].lower
            p = self.probs(w)
            sl = self.slices[w]
            logps.append(float(np.log(p[c])))
            g = -p
            g[c] += 1.0
            grad[sl] += g
            word = self.options[w][c]
            words.append(word)
            if c != 0:
                choices[i] = word
        return Candidate(tokens=words, step_logps=logps, text=self.render(doc, choices), grad=grad)

    def sample(self, doc, rng: np.random.Generator) -> Candidate:
        doc = doc if isinstance(doc, TokenizedText) else tokenize(doc)
        picks = []
        for i in self.decisions(doc):
            p = self.probs(doc.tokens[i].lower)
            c = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
            picks.append((i, min(c, len(p) - 1)))
        return self._build(doc, picks)

    def greedy(self, doc) -> Candidate:
        doc = doc if isinstance(doc, TokenizedText) else tokenize(doc)
        # np.argmax returns the lowest index on ties
        picks = [(i, int(np.argmax(self.params[self.slices[doc.tokens[i].lower]])))
                 for i in self.decisions(doc)]
        return self._build(doc, picks)

    def update(self, gradient: np.ndarray, learning_rate: float) -> None:
        self.params -= learning_rate * gradient


class KisRewardFn:
    """``reward_fn`` for the trainer: total reward of ``score_pair``, memoized per text pair."""

    def __init__(self, cfg: ScoreConfig = ScoreConfig()):
        self.cfg = cfg
        self._cache = {}

    def report(self, original, text: str):
        key = (original.raw if isinstance(original, TokenizedText) else original, text)
        rep = self._cache.get(key)
        if rep is None:
            rep = self._cache[key] = score_pair(original, text, self.cfg)
        return rep

    def __call__(self, original, candidate) -> float:
        text = candidate.text if isinstance(candidate, Candidate) else candidate
        return self.report(original, text).total

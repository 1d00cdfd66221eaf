"""Composite reward: simplicity x fluency x salience x guardrails."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Optional

from .errors import ComponentOutOfRange
from .fluency import (DEFAULT_LAMBDA, Discriminator, LanguageModel, NGramLM,
                      lm_score_from_values, train_ngram_lm)
from .guardrails import BrevityBounds, GuardrailVerdict, check
from .salience import CopyCloze, CoverageModel, coverage
from .simplicity import (DEFAULT_SIMPLICITY, SimplicityConfig, ZipfTable, content_words,
                         default_lexicon, delta_z, fkgl, ramp, target_delta)
from .textproc import (StopwordList, TokenizedText, default_stopwords, extract_entities,
                       tokenize)

__all__ = ["ScoreConfig", "RewardReport", "total_reward", "score_pair", "default_lm",
           "COMPONENTS"]

COMPONENTS = ("fluency", "salience", "simplicity")


@lru_cache(maxsize=None)
def default_lm() -> NGramLM:
    """Trigram model over the bundled news sample, one paragraph per line."""
    text = resources.files("kisimple").joinpath("data", "news_sample.txt").read_text(encoding="utf-8")
    docs = [tokenize(line) for line in text.splitlines() if line.strip()]
    return train_ngram_lm(docs, order=3, add_k=0.1)


@dataclass(frozen=True)
class ScoreConfig:
    """Every knob of the reward. ``None`` model fields fall back to bundled defaults;
    ``disc=None`` drops the discriminator factor entirely (cold start)."""

    lam: float = DEFAULT_LAMBDA
    simplicity: SimplicityConfig = DEFAULT_SIMPLICITY
    brevity_bounds: BrevityBounds = field(default_factory=BrevityBounds)
    use_fluency: bool = True
    use_salience: bool = True
    use_simplicity: bool = True
    lm: Optional[LanguageModel] = None
    disc: Optional[Discriminator] = None
    coverage_model: Optional[CoverageModel] = None
    lexicon: Optional[ZipfTable] = None
    stopwords: Optional[StopwordList] = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not (self.use_fluency or self.use_salience or self.use_simplicity):
            raise ValueError("at least one reward component must be enabled")

    def ablate(self, *names: str) -> "ScoreConfig":
        unknown = set(names) - set(COMPONENTS)
        if unknown:
            raise ValueError(f"unknown component(s): {', '.join(sorted(unknown))}")
        return replace(self, **{f"use_{n}": False for n in names})

    @property
    def language_model(self) -> LanguageModel:
        return self.lm if self.lm is not None else default_lm()

    @property
    def zipf(self) -> ZipfTable:
        return self.lexicon if self.lexicon is not None else default_lexicon()

    @property
    def stopword_list(self) -> StopwordList:
        return self.stopwords if self.stopwords is not None else default_stopwords()


@dataclass(frozen=True)
class RewardReport:
    s_score: Optional[float]
    l_score: Optional[float]
    lm_score: Optional[float]
    d_score: Optional[float]
    coverage: Optional[float]
    guardrails: GuardrailVerdict
    total: float
    fkgl_original: Optional[float] = None
    fkgl_simplified: Optional[float] = None
    target_delta: Optional[float] = None
    delta_z: Optional[float] = None
    lm_original: Optional[float] = None
    lm_simplified: Optional[float] = None

    def to_dict(self, ndigits: Optional[int] = 12) -> dict:
        """JSON-ready dict with a fixed key order.

        Floats are rounded to ``ndigits`` decimals so that libm differences in
        the last ulp do not leak into serialized reports.
        """
        r = (lambda x: x) if ndigits is None else (lambda x: _round(x, ndigits))
        g = self.guardrails
        return {
            "s_score": r(self.s_score),
            "l_score": r(self.l_score),
            "lm_score": r(self.lm_score),
            "d_score": r(self.d_score),
            "coverage": r(self.coverage),
            "guardrails": {
                "brevity": g.brevity.value,
                "inaccuracy": g.inaccuracy.value,
                "compression": r(g.compression),
                "novel_entities": sorted(g.novel_entities),
            },
            "total": r(self.total),
            "details": {
                "fkgl_original": r(self.fkgl_original),
                "fkgl_simplified": r(self.fkgl_simplified),
                "target_delta": r(self.target_delta),
                "delta_z": r(self.delta_z),
                "lm_original": r(self.lm_original),
                "lm_simplified": r(self.lm_simplified),
            },
        }


def _round(x, ndigits):
    if x is None:
        return None
    y = round(x, ndigits)
    return 0.0 if y == 0 else y  # no "-0.0" in output


def total_reward(s_score=None, l_score=None, lm_score=None, d_score=None, coverage=None,
                 guardrails_passed: bool = True) -> float:
    """Product of the enabled components (``None`` = disabled) times the guardrail bit."""
    factors = []
    for name, v in (("s_score", s_score), ("l_score", l_score), ("lm_score", lm_score),
                    ("d_score", d_score), ("coverage", coverage)):
        if v is None:
            continue
        if not (0.0 <= v <= 1.0) or math.isnan(v):
            raise ComponentOutOfRange(f"{name}={v!r} outside [0, 1]")
        factors.append(v)
    if not guardrails_passed:
        return 0.0
    return math.prod(factors)


def score_pair(original, simplified, cfg: ScoreConfig = ScoreConfig(),
               coverage_override: Optional[float] = None) -> RewardReport:
    """Score one (original, simplified) pair under ``cfg``.

    Accepts raw strings or already tokenized documents. ``coverage_override``
    replaces the coverage model's output, e.g. with an externally computed
    cloze score.
    """
    sw = cfg.stopword_list
    p = original if isinstance(original, TokenizedText) else tokenize(original, sw)
    q = simplified if isinstance(simplified, TokenizedText) else tokenize(simplified, sw)

    s = l = lms = ds = cov = None
    f0 = f1 = tgt = dz = lp = lq = None
    if cfg.use_simplicity:
        f0, f1 = fkgl(p), fkgl(q)
        tgt = target_delta(f0, cfg.simplicity)
        s = ramp(f0 - f1, tgt)
        dz = delta_z(content_words(p), content_words(q), cfg.zipf)
        l = ramp(dz, cfg.simplicity.target_zipf_shift)
    if cfg.use_fluency:
        lm = cfg.language_model
        lp, lq = lm.avg_log_likelihood(p), lm.avg_log_likelihood(q)
        lms = lm_score_from_values(lp, lq, cfg.lam)
        if cfg.disc is not None:
            ds = cfg.disc.prob_authentic(q.raw)
    if cfg.use_salience:
        if coverage_override is not None:
            cov = float(coverage_override)
        else:
            cov = coverage(p, q, cfg.coverage_model or CopyCloze(), sw)

    lex = cfg.zipf
    guard = check(p, q, extract_entities(p, lex), extract_entities(q, lex), cfg.brevity_bounds)
    total = total_reward(s, l, lms, ds, cov, guard.passed)
    return RewardReport(
        s_score=s, l_score=l, lm_score=lms, d_score=ds, coverage=cov, guardrails=guard,
        total=total, fkgl_original=f0, fkgl_simplified=f1, target_delta=tgt, delta_z=dz,
        lm_original=lp, lm_simplified=lq,
    )

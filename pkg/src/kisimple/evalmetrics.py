"""Reference-based (SARI, BLEU) and reference-free corpus evaluation."""
from __future__ import annotations

import logging
import math
from collections import Counter
from fractions import Fraction
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from .errors import KisError, NoReferences
from .guardrails import brevity
from .salience import coverage
from .simplicity import fkgl
from .textproc import tokenize

__all__ = ["EvalRecord", "CorpusReport", "sari", "sari_components", "bleu", "corpus_report"]

log = logging.getLogger(__name__)

MAX_ORDER = 4


@dataclass(frozen=True)
class EvalRecord:
    id: str
    original: str
    output: str
    references: tuple = ()

    def __post_init__(self):
        if not self.original.strip() or not self.output.strip():
            raise ValueError(f"record {self.id!r}: original and output must be non-empty")
        object.__setattr__(self, "references", tuple(self.references))


@dataclass(frozen=True)
class CorpusReport:
    sari: Optional[float]
    bleu: Optional[float]
    pct_fkgl: float
    mean_compression: float
    mean_coverage: float
    n: int
    n_skipped: int = 0
    n_with_references: int = 0

    def to_dict(self, ndigits: int = 12) -> dict:
        return {k: (round(v, ndigits) if isinstance(v, float) else v) for k, v in asdict(self).items()}


def _toks(text: str) -> list:
    return tokenize(text).lowers()


def _ngrams(toks: Sequence[str], n: int) -> Counter:
    return Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))


def _f1(p, r):
    return Fraction(0) if p + r == 0 else 2 * p * r / (p + r)


def _sari_order(src: Counter, out: Counter, refs: list) -> Optional[tuple]:
    """Exact (keep F1, delete precision, add F1) for one n-gram order, or
    ``None`` when no text has n-grams of that order."""
    if not src and not out and not any(refs):
        return None
    m = len(refs)
    ref = Counter()
    for r in refs:
        ref.update(r)
    # reference counts averaged over references, kept as exact fractions
    ref_avg = {g: Fraction(c, m) for g, c in ref.items()}

    keep_cand = src & out
    keep_gold = {g: min(c, ref_avg[g]) for g, c in src.items() if g in ref_avg}
    if not keep_cand and not keep_gold:
        keep = Fraction(1)
    elif not keep_cand or not keep_gold:
        keep = Fraction(0)
    else:
        good = {g: min(c, ref_avg.get(g, 0)) for g, c in keep_cand.items()}
        p = sum(Fraction(good[g]) / keep_cand[g] for g in keep_cand) / len(keep_cand)
        r = sum(Fraction(good[g]) / keep_gold[g]
                for g in keep_cand if g in keep_gold) / len(keep_gold)
        keep = _f1(p, r)

    del_cand = src - out
    del_gold = [g for g, c in src.items() if c > ref_avg.get(g, 0)]
    if not del_cand:
        delete = Fraction(0 if del_gold else 1)
    else:
        # a deletion is good up to the amount the references also dropped
        delete = sum(
            Fraction(min(c, max(src[g] - ref_avg.get(g, 0), 0))) / c for g, c in del_cand.items()
        ) / len(del_cand)

    add_cand = set(out) - set(src)
    add_gold = set(ref_avg) - set(src)
    if not add_cand and not add_gold:
        add = Fraction(1)
    elif not add_cand or not add_gold:
        add = Fraction(0)
    else:
        hits = len(add_cand & add_gold)
        add = _f1(Fraction(hits, len(add_cand)), Fraction(hits, len(add_gold)))
    return keep, delete, add


def sari_components(original: str, output: str, references: Sequence[str]) -> list:
    """Per-order ``(keep, delete, add)`` as exact fractions; ``None`` for empty orders."""
    if not references:
        raise NoReferences("SARI needs at least one reference")
    s, o = _toks(original), _toks(output)
    rs = [_toks(r) for r in references]
    return [
        _sari_order(_ngrams(s, n), _ngrams(o, n), [_ngrams(r, n) for r in rs])
        for n in range(1, MAX_ORDER + 1)
    ]


def sari(original: str, output: str, references: Sequence[str]) -> float:
    """SARI on lowercased tokens, n-gram orders 1-4.

    Keep and add are F1 scores, delete is precision only. A category with
    neither candidate nor gold n-grams scores 1. Orders for which none of
    the texts has any n-gram are left out of the average. Computed in exact
    rational arithmetic and rounded once.
    """
    parts = [c for c in sari_components(original, output, references) if c is not None]
    return float(sum(sum(c) / 3 for c in parts) / len(parts))


def bleu(output: str, references: Sequence[str]) -> float:
    """Sentence BLEU-4 with brevity penalty and add-one smoothing on orders >= 2."""
    if not references:
        raise NoReferences("BLEU needs at least one reference")
    hyp = _toks(output)
    refs = [_toks(r) for r in references]
    log_p = 0.0
    for n in range(1, MAX_ORDER + 1):
        h = _ngrams(hyp, n)
        max_ref = Counter()
        for r in refs:
            max_ref |= _ngrams(r, n)
        matched = sum(min(c, max_ref[g]) for g, c in h.items())
        total = max(len(hyp) - n + 1, 0)
        if n == 1:
            if matched == 0:
                return 0.0
            p = matched / total
        else:
            p = (matched + 1) / (total + 1)
        log_p += math.log(p) / MAX_ORDER
    c = len(hyp)
    # closest reference length, shorter one on ties
    r = min((abs(len(x) - c), len(x)) for x in refs)[1]
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return bp * math.exp(log_p)


def corpus_report(records: Sequence[EvalRecord], cfg=None, reference_metrics: bool = True,
                  coverage_scores: Optional[dict] = None) -> CorpusReport:
    """Macro averages over ``records``.

    Records that fail to tokenize or score are skipped and counted. SARI and
    BLEU use only records that carry references; requesting them on a
    corpus with no references raises :class:`NoReferences`.
    """
    if not records:
        raise ValueError("no records to evaluate")
    if reference_metrics and not any(r.references for r in records):
        raise NoReferences("reference metrics requested but no record has references")
    sw = cfg.stopword_list if cfg is not None else None
    bounds = cfg.brevity_bounds if cfg is not None else None
    model = cfg.coverage_model if cfg is not None else None

    saris, bleus, lowered, comps, covs = [], [], [], [], []
    skipped = 0
    for rec in records:
        try:
            p, q = tokenize(rec.original, sw), tokenize(rec.output, sw)
            low = fkgl(q) < fkgl(p)
            comp = brevity(p, q, bounds)[1] if bounds else brevity(p, q)[1]
            if coverage_scores is not None and rec.id in coverage_scores:
                cov = float(coverage_scores[rec.id])
            else:
                cov = coverage(p, q, model, sw)
            refs = None
            if reference_metrics and rec.references:
                refs = (sari(rec.original, rec.output, rec.references),
                        bleu(rec.output, rec.references))
        except KisError as exc:
            skipped += 1
            log.warning("skipping record %r: %s", rec.id, exc)
            continue
        lowered.append(low)
        comps.append(comp)
        covs.append(cov)
        if refs is not None:
            saris.append(refs[0])
            bleus.append(refs[1])
    if skipped:
        log.warning("skipped %d of %d records", skipped, len(records))
    n = len(covs)
    if n == 0:
        raise ValueError(f"all {skipped} records failed to score")
    return CorpusReport(
        sari=math.fsum(saris) / len(saris) if saris else None,
        bleu=math.fsum(bleus) / len(bleus) if bleus else None,
        pct_fkgl=100.0 * sum(lowered) / n,
        mean_compression=math.fsum(comps) / n,
        mean_coverage=math.fsum(covs) / n,
        n=n,
        n_skipped=skipped,
        n_with_references=len(saris),
    )

"""Fluency: language-model score and the retrained authenticity discriminator."""
from __future__ import annotations

import json
import math
import struct
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from . import _kernels
from .errors import (BufferFull, DegenerateBuffer, EmptyCorpus, EmptyInput,
                     ModelFormatError, Unreachable)
from .textproc import TokenizedText, tokenize

__all__ = [
    "LanguageModel",
    "NGramLM",
    "train_ngram_lm",
    "lm_score",
    "lm_score_from_values",
    "calibrate_lambda",
    "Discriminator",
    "TrainingBuffer",
    "buffer_push",
    "retrain_discriminator",
    "d_score",
    "f1_score",
]

BOS = "<s>"
UNK = "<unk>"
LM_MAGIC = b"KISLM1"
DISC_MAGIC = b"KISD1"
DEFAULT_LAMBDA = 1.3
DEFAULT_FEATURE_DIM = 1 << 18


class LanguageModel(Protocol):
    def avg_log_likelihood(self, doc: TokenizedText) -> float:
        """Mean natural-log probability per token."""


class NGramLM:
    """Interpolated add-k n-gram model over casefolded tokens.

    ``P_n(w | h) = (c(h, w) + k|V| P_{n-1}(w | h')) / (c(h) + k|V|)`` where
    ``h'`` drops the oldest context word and ``P_0`` is uniform, so every
    conditional distribution over ``V`` (vocabulary plus ``<unk>``) sums to
    one. Contexts are padded with ``<s>`` at each sentence start; no
    end-of-sentence event is scored. With ``add_k == 0`` this is the
    unsmoothed maximum-likelihood model, which backs off only when a
    context was never seen.
    """

    def __init__(self, order: int, add_k: float, counts: dict, vocab: Iterable[str]):
        self.order = order
        self.add_k = float(add_k)
        self.vocab = frozenset(vocab) | {UNK}
        # counts[n][context][word], n = 1..order, len(context) = n - 1
        self.counts = counts
        self.totals = {
            n: {h: sum(ws.values()) for h, ws in by_ctx.items()} for n, by_ctx in counts.items()
        }
        self._kv = self.add_k * len(self.vocab)

    def _map(self, word: str) -> str:
        return word if word in self.vocab else UNK

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """Conditional probability of ``word`` after ``context`` (oldest first)."""
        word = self._map(word)
        if self.order == 1:
            return self._prob(word, ())
        context = tuple(c if c == BOS else self._map(c) for c in context)
        context = ((BOS,) * (self.order - 1) + context)[-(self.order - 1):]
        return self._prob(word, context)

    def _prob(self, word: str, context: tuple) -> float:
        n = len(context) + 1
        lower = self._prob(word, context[1:]) if n > 1 else 1.0 / len(self.vocab)
        by_ctx = self.counts.get(n, {}).get(context)
        total = self.totals.get(n, {}).get(context, 0)
        denom = total + self._kv
        if denom == 0:
            return lower
        c = by_ctx.get(word, 0) if by_ctx else 0
        return (c + self._kv * lower) / denom

    def log_likelihoods(self, doc: TokenizedText) -> list[float]:
        out = []
        pad = [BOS] * (self.order - 1)
        for sent in doc.sentence_tokens():
            seq = pad + [self._map(t.lower) for t in sent]
            for i in range(len(pad), len(seq)):
                ctx = tuple(seq[i - self.order + 1:i]) if self.order > 1 else ()
                p = self._prob(seq[i], ctx)
                out.append(math.log(p) if p > 0 else -math.inf)
        return out

    def avg_log_likelihood(self, doc: TokenizedText) -> float:
        lls = self.log_likelihoods(doc)
        if not lls:
            raise EmptyInput("cannot score a document without tokens")
        return math.fsum(lls) / len(lls)

    # -- serialization ---------------------------------------------------
    def to_bytes(self) -> bytes:
        ngrams = []
        for n in sorted(self.counts):
            for h in sorted(self.counts[n]):
                for w, c in sorted(self.counts[n][h].items()):
                    ngrams.append([n, list(h), w, c])
        payload = json.dumps(
            {"order": self.order, "add_k": self.add_k,
             "vocab": sorted(self.vocab - {UNK}), "ngrams": ngrams},
            ensure_ascii=False, separators=(",", ":"),
        ).encode("utf-8")
        return LM_MAGIC + struct.pack("<I", len(payload)) + payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "NGramLM":
        if not data.startswith(LM_MAGIC):
            raise ModelFormatError("not a KISLM1 language model file")
        (size,) = struct.unpack_from("<I", data, len(LM_MAGIC))
        body = data[len(LM_MAGIC) + 4:]
        if len(body) != size:
            raise ModelFormatError("truncated language model file")
        obj = json.loads(body.decode("utf-8"))
        counts: dict = defaultdict(lambda: defaultdict(dict))
        for n, h, w, c in obj["ngrams"]:
            counts[n][tuple(h)][w] = c
        return cls(obj["order"], obj["add_k"], _freeze(counts), obj["vocab"])

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "NGramLM":
        return cls.from_bytes(Path(path).read_bytes())


def _freeze(counts) -> dict:
    return {n: {h: dict(ws) for h, ws in by_ctx.items()} for n, by_ctx in counts.items()}


def train_ngram_lm(corpus: Sequence[TokenizedText], order: int = 3, add_k: float = 0.1) -> NGramLM:
    if not corpus:
        raise EmptyCorpus("cannot train a language model on an empty corpus")
    if order < 1:
        raise ValueError("order must be >= 1")
    if add_k < 0:
        raise ValueError("add_k must be >= 0")
    counts: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(int)))
    vocab = set()
    pad = [BOS] * (order - 1)
    for doc in corpus:
        for sent in doc.sentence_tokens():
            seq = pad + [t.lower for t in sent]
            vocab.update(seq[len(pad):])
            for i in range(len(pad), len(seq)):
                for n in range(1, order + 1):
                    counts[n][tuple(seq[i - n + 1:i])][seq[i]] += 1
    if not vocab:
        raise EmptyCorpus("corpus contains no tokens")
    return NGramLM(order, add_k, _freeze(counts), vocab)


def lm_score_from_values(lm_p: float, lm_q: float, lam: float = DEFAULT_LAMBDA) -> float:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return min(1.0, max(0.0, 1.0 - (lm_p - lm_q) / lam))


def lm_score(p: TokenizedText, q: TokenizedText, lm: LanguageModel, lam: float = DEFAULT_LAMBDA) -> float:
    return lm_score_from_values(lm.avg_log_likelihood(p), lm.avg_log_likelihood(q), lam)


def calibrate_lambda(pairs, lm: LanguageModel, target_mean: float = 0.9,
                     lo: float = 1e-4, hi: float = 1e6, tol: float = 1e-4) -> float:
    """Smallest lambda whose mean LM score over ``pairs`` reaches ``target_mean``.

    ``pairs`` holds ``(original, simplified)`` documents. Bisection on
    ``[lo, hi]`` to width ``tol``; the returned value always satisfies the
    target.
    """
    if not pairs:
        raise ValueError("no pairs to calibrate on")
    if not 0 < target_mean <= 1:
        raise ValueError("target_mean must be in (0, 1]")
    values = [(lm.avg_log_likelihood(p), lm.avg_log_likelihood(q)) for p, q in pairs]

    def mean_at(lam):
        return math.fsum(lm_score_from_values(a, b, lam) for a, b in values) / len(values)

    if mean_at(lo) >= target_mean:
        return lo
    if mean_at(hi) < target_mean:
        raise Unreachable(
            f"mean LM score at lambda={hi:g} is {mean_at(hi):.6f} < target {target_mean}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mean_at(mid) >= target_mean:
            hi = mid
        else:
            lo = mid
    return hi


# -- discriminator ---------------------------------------------------------

def _surfaces(text: str) -> list[str]:
    # surfaces keep case so capitalization tricks stay visible
    try:
        return [t.surface for t in tokenize(text).tokens]
    except EmptyInput:
        return []


def featurize(text: str, dim: int = DEFAULT_FEATURE_DIM):
    return _kernels.hashed_features(_surfaces(text), dim)


@dataclass
class Discriminator:
    """Logistic classifier over hashed token and byte-trigram features."""

    weights: np.ndarray = field(default_factory=lambda: np.zeros(DEFAULT_FEATURE_DIM))
    bias: float = 0.0
    feature_dim: int = DEFAULT_FEATURE_DIM
    checkpoint_f1: tuple = ()
    selected_epoch: Optional[int] = None

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.feature_dim,):
            raise ValueError("weights length must equal feature_dim")

    def logit(self, text: str) -> float:
        idx, val = featurize(text, self.feature_dim)
        return _kernels.sparse_dot(self.weights, idx, val) + self.bias

    def prob_authentic(self, text: str) -> float:
        return _sigmoid(self.logit(text))

    def to_bytes(self) -> bytes:
        nz = np.flatnonzero(self.weights).astype("<u4")
        head = struct.pack("<IdI", self.feature_dim, self.bias, len(nz))
        return DISC_MAGIC + head + nz.tobytes() + self.weights[nz].astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Discriminator":
        if not data.startswith(DISC_MAGIC):
            raise ModelFormatError("not a KISD1 discriminator file")
        off = len(DISC_MAGIC)
        try:
            dim, bias, n = struct.unpack_from("<IdI", data, off)
            off += struct.calcsize("<IdI")
            idx = np.frombuffer(data, dtype="<u4", count=n, offset=off)
            vals = np.frombuffer(data, dtype="<f8", count=n, offset=off + 4 * n)
        except (struct.error, ValueError) as exc:
            raise ModelFormatError("truncated discriminator file") from exc
        w = np.zeros(dim)
        w[idx.astype(np.int64)] = vals
        return cls(weights=w, bias=bias, feature_dim=dim)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Discriminator":
        return cls.from_bytes(Path(path).read_bytes())


_P_MAX = math.nextafter(1.0, 0.0)
_P_MIN = math.nextafter(0.0, 1.0)


def _sigmoid(z: float) -> float:
    # kept strictly inside (0, 1) even where the logistic rounds to 0 or 1
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        p = e / (1.0 + e)
    return min(max(p, _P_MIN), _P_MAX)


def d_score(q, disc: Discriminator) -> float:
    """Probability that ``q`` (text or TokenizedText) is authentic."""
    text = q.raw if isinstance(q, TokenizedText) else q
    return disc.prob_authentic(text)


@dataclass
class TrainingBuffer:
    """Labelled texts awaiting the next discriminator retrain.

    Label 1 marks authentic paragraphs, 0 generated ones.
    """

    capacity: int = 2000
    items: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def full(self) -> bool:
        return len(self.items) >= self.capacity

    def push(self, text: str, label: int) -> bool:
        if label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label!r}")
        if self.full:
            raise BufferFull("buffer is full; retrain to drain it")
        self.items.append((text, int(label)))
        return self.full

    def drain(self) -> list:
        items, self.items = self.items, []
        return items


def buffer_push(buf: TrainingBuffer, text: str, label: int) -> bool:
    return buf.push(text, label)


def f1_score(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    """F1 for the positive class; zero predicted positives gives 0."""
    tp = sum(1 for t, p in zip(y_true, y_pred) if t == 1 and p == 1)
    pred_pos = sum(y_pred)
    true_pos = sum(y_true)
    if pred_pos == 0 or true_pos == 0 or tp == 0:
        return 0.0
    precision = tp / pred_pos
    recall = tp / true_pos
    return 2 * precision * recall / (precision + recall)


def _csr(rows):
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, (idx, _) in enumerate(rows):
        indptr[i + 1] = indptr[i] + len(idx)
    indices = np.concatenate([r[0] for r in rows]) if rows else np.zeros(0, np.int64)
    values = np.concatenate([r[1] for r in rows]) if rows else np.zeros(0)
    return indptr, indices.astype(np.int64), values.astype(np.float64)


def retrain_discriminator(buf: TrainingBuffer, seed: int, epochs: int = 5,
                          learning_rate: float = 0.1, feature_dim: int = DEFAULT_FEATURE_DIM,
                          validation_fraction: float = 0.1) -> Discriminator:
    """Train a fresh discriminator on a full buffer and drain it.

    Weights start from zero on every call. The buffer is shuffled once and
    split into train/validation; each epoch is one pass of per-example
    logistic SGD followed by a checkpoint. The checkpoint with the highest
    validation F1 (earliest on ties) is returned.
    """
    if not buf.full:
        raise ValueError(f"buffer holds {len(buf)} of {buf.capacity} items; retrain needs it full")
    labels = {lab for _, lab in buf.items}
    if labels != {0, 1}:
        raise DegenerateBuffer(f"buffer needs both labels, found {sorted(labels)}")

    items = list(buf.items)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(items))
    n_val = max(1, int(round(validation_fraction * len(items))))
    train_ids, val_ids = perm[:-n_val], perm[-n_val:]

    rows = [featurize(text, feature_dim) for text, _ in items]
    y = np.array([lab for _, lab in items], dtype=np.float64)
    indptr, indices, values = _csr(rows)

    weights = np.zeros(feature_dim)
    bias = 0.0
    best = None
    f1s = []
    y_val = [int(y[i]) for i in val_ids]
    for epoch in range(1, epochs + 1):
        order = np.ascontiguousarray(rng.permutation(train_ids), dtype=np.int64)
        bias = _kernels.sgd_epoch(weights, bias, indptr, indices, values, y, order, learning_rate)
        preds = [
            int(_kernels.sparse_dot(weights, rows[i][0], rows[i][1]) + bias > 0.0) for i in val_ids
        ]
        f1 = f1_score(y_val, preds)
        f1s.append(f1)
        if best is None or f1 > best[0]:
            best = (f1, epoch, weights.copy(), bias)

    buf.drain()
    _, epoch, w, b = best
    return Discriminator(weights=w, bias=b, feature_dim=feature_dim,
                         checkpoint_f1=tuple(f1s), selected_epoch=epoch)

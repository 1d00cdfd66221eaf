"""Pure-Python reference versions of the compiled kernels.

Every function here must return bit-identical results to its counterpart
in ``_ckernels.pyx``; arithmetic is done in the same order on purpose.
"""
import math

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF
VOWELS = frozenset("aeiouy")


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def count_syllables(word: str) -> int:
    w = word.lower()
    n = len(w)
    groups = 0
    prev = False
    for ch in w:
        v = ch in VOWELS
        if v and not prev:
            groups += 1
        prev = v
    if n >= 2 and w[-1] == "e" and w[-2] not in VOWELS and groups > 1:
        groups -= 1
    if n >= 3 and w[-2:] == "le" and w[-3] not in VOWELS:
        groups += 1
    return max(groups, 1)


def _feature_hashes(tokens, dim):
    enc = [t.encode("utf-8") for t in tokens]
    out = []
    for t in enc:
        out.append(fnv1a_64(b"u:" + t) % dim)
    for a, b in zip(enc, enc[1:]):
        out.append(fnv1a_64(b"b:" + a + b" " + b) % dim)
    joined = b" " + b" ".join(enc) + b" "
    for i in range(len(joined) - 2):
        out.append(fnv1a_64(b"c:" + joined[i:i + 3]) % dim)
    return out


def hashed_features(tokens, dim):
    """Hashed unigram, bigram and byte-trigram counts.

    Returns ``(indices, values)`` with indices sorted ascending and raw
    counts as float64 values.
    """
    counts = {}
    for h in _feature_hashes(tokens, dim):
        counts[h] = counts.get(h, 0) + 1
    idx = sorted(counts)
    return np.array(idx, dtype=np.int64), np.array([float(counts[i]) for i in idx], dtype=np.float64)


def sparse_dot(weights, indices, values):
    acc = 0.0
    for i, v in zip(indices.tolist(), values.tolist()):
        acc += weights[i] * v
    return acc


def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def sgd_epoch(weights, bias, indptr, indices, values, labels, order, lr):
    """One pass of per-example logistic SGD; updates ``weights`` in place."""
    ip = indptr.tolist()
    ix = indices.tolist()
    vx = values.tolist()
    # plain list for speed; written back at the end
    w = weights.tolist()
    y = [float(v) for v in labels]
    for r in order.tolist():
        lo, hi = ip[r], ip[r + 1]
        z = bias
        for p in range(lo, hi):
            z += w[ix[p]] * vx[p]
        g = _sigmoid(z) - y[r]
        for p in range(lo, hi):
            w[ix[p]] -= lr * g * vx[p]
        bias -= lr * g
    weights[:] = w
    return bias

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Semantics mirror ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325ULL
cdef uint64_t FNV_PRIME = 0x100000001B3ULL


cdef inline uint64_t _fnv_update(uint64_t h, const unsigned char* buf, Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    for i in range(n):
        h = (h ^ buf[i]) * FNV_PRIME
    return h


def fnv1a_64(bytes data):
    cdef const unsigned char* buf = data
    return _fnv_update(FNV_OFFSET, buf, len(data))


cdef inline bint _is_vowel(Py_UCS4 c):
    return c == u'a' or c == u'e' or c == u'i' or c == u'o' or c == u'u' or c == u'y'


def count_syllables(str word):
    cdef str w = word.lower()
    cdef Py_ssize_t n = len(w)
    cdef int groups = 0
    cdef bint prev = False, v
    cdef Py_UCS4 ch
    for ch in w:
        v = _is_vowel(ch)
        if v and not prev:
            groups += 1
        prev = v
    if n >= 2 and w[n - 1] == u'e' and not _is_vowel(w[n - 2]) and groups > 1:
        groups -= 1
    if n >= 3 and w[n - 2] == u'l' and w[n - 1] == u'e' and not _is_vowel(w[n - 3]):
        groups += 1
    return groups if groups > 1 else 1


def hashed_features(list tokens, int64_t dim):
    cdef list enc = [(<str>t).encode("utf-8") for t in tokens]
    cdef Py_ssize_t nt = len(enc), i, j, k, m
    cdef bytes joined = b" " + b" ".join(enc) + b" "
    cdef Py_ssize_t nj = len(joined)
    cdef Py_ssize_t total = nt + (nt - 1 if nt > 0 else 0) + (nj - 2 if nj > 2 else 0)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] hs = np.empty(total, dtype=np.uint64)
    cdef const unsigned char* buf
    cdef const unsigned char* jb = joined
    cdef uint64_t h
    cdef uint64_t udim = <uint64_t>dim
    cdef bytes a, b
    k = 0
    for i in range(nt):
        a = enc[i]
        buf = a
        h = _fnv_update(FNV_OFFSET, <const unsigned char*>b"u:", 2)
        hs[k] = _fnv_update(h, buf, len(a)) % udim
        k += 1
    for i in range(nt - 1):
        a = enc[i]
        b = enc[i + 1]
        h = _fnv_update(FNV_OFFSET, <const unsigned char*>b"b:", 2)
        buf = a
        h = _fnv_update(h, buf, len(a))
        h = _fnv_update(h, <const unsigned char*>b" ", 1)
        buf = b
        hs[k] = _fnv_update(h, buf, len(b)) % udim
        k += 1
    for i in range(nj - 2):
        h = _fnv_update(FNV_OFFSET, <const unsigned char*>b"c:", 2)
        hs[k] = _fnv_update(h, jb + i, 3) % udim
        k += 1
    hs.sort()
    # run-length encode the sorted hashes into (index, count)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.empty(total, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cnt = np.empty(total, dtype=np.float64)
    m = 0
    i = 0
    while i < total:
        j = i
        while j < total and hs[j] == hs[i]:
            j += 1
        idx[m] = <int64_t>hs[i]
        cnt[m] = <double>(j - i)
        m += 1
        i = j
    return idx[:m].copy(), cnt[:m].copy()


def sparse_dot(double[::1] weights, const int64_t[::1] indices, const double[::1] values):
    cdef double acc = 0.0
    cdef Py_ssize_t p
    for p in range(indices.shape[0]):
        acc += weights[indices[p]] * values[p]
    return acc


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


def sgd_epoch(double[::1] weights, double bias, const int64_t[::1] indptr,
              const int64_t[::1] indices, const double[::1] values,
              const double[::1] labels, const int64_t[::1] order, double lr):
    cdef Py_ssize_t q, r, p, lo, hi
    cdef double z, g
    with nogil:
        for q in range(order.shape[0]):
            r = order[q]
            lo = indptr[r]
            hi = indptr[r + 1]
            z = bias
            for p in range(lo, hi):
                z += weights[indices[p]] * values[p]
            g = _sigmoid(z) - labels[r]
            for p in range(lo, hi):
                weights[indices[p]] -= lr * g * values[p]
            bias -= lr * g
    return bias

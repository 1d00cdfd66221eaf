"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit
from importlib import resources

import numpy as np

from kisimple._kernels import compiled_backend, python_backend

DIM = 1 << 18


def workload():
    text = resources.files("kisimple").joinpath("data", "news_sample.txt").read_text("utf-8")
    docs = [line.split() for line in text.splitlines() if line.strip()]
    words = [w for d in docs for w in d]
    feats = [python_backend.hashed_features(d, DIM) for d in docs]
    indptr = np.zeros(len(feats) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(i) for i, _ in feats])
    indices = np.concatenate([i for i, _ in feats])
    values = np.concatenate([v for _, v in feats])
    labels = (np.arange(len(docs)) % 2).astype(np.float64)
    order = np.random.default_rng(0).permutation(len(docs))
    return docs, words, (indptr, indices, values, labels, order)


def cases(be, docs, words, mat):
    blobs = [w.encode("utf-8") for w in words]
    return {
        "fnv1a_64": lambda: [be.fnv1a_64(b) for b in blobs],
        "count_syllables": lambda: [be.count_syllables(w) for w in words],
        "hashed_features": lambda: [be.hashed_features(d, DIM) for d in docs],
        "sgd_epoch": lambda: be.sgd_epoch(np.zeros(DIM), 0.0, *mat, 0.1),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    docs, words, mat = workload()
    print(f"{len(docs)} paragraphs, {len(words)} words")
    py = cases(python_backend, docs, words, mat)
    cy = cases(compiled_backend, docs, words, mat) if compiled_backend else {}
    if not cy:
        print("compiled extension not built; timing the Python fallback only")
    print(f"{'kernel':<18}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in py.items():
        t_py = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
        if name in cy:
            t_cy = min(timeit.repeat(cy[name], number=1, repeat=args.repeat)) * 1e3
            print(f"{name:<18}{t_py:>12.2f}{t_cy:>12.2f}{t_py / t_cy:>9.1f}x")
        else:
            print(f"{name:<18}{t_py:>12.2f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()

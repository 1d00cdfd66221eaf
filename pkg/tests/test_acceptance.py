"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line
that is printed in the terminal summary (and echoed with ``-s``)."""
import json
import math
import random
import subprocess
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from kisimple.evalmetrics import bleu, sari
from kisimple.fluency import (Discriminator, TrainingBuffer, buffer_push, calibrate_lambda,
                              d_score, lm_score_from_values, retrain_discriminator,
                              train_ngram_lm)
from kisimple.guardrails import Verdict, brevity, brevity_verdict, inaccuracy
from kisimple.kscst import (Candidate, CandidateBatch, TrainerConfig, compare_k, kscst_gradient,
                            kscst_loss, scst_loss)
from kisimple.policy import KisRewardFn, ToyLexicalPolicy, bundled_substitutions, bundled_toy_inputs
from kisimple.reward import ScoreConfig, score_pair, total_reward
from kisimple.salience import coverage, mask, mask_rate
from kisimple.simplicity import (ZipfTable, delta_z, fkgl, l_score, ramp, s_score_from_grades,
                                 target_delta)
from kisimple.textproc import EntitySet, extract_entities, tokenize

from . import oracles
from .conftest import ACCEPTANCE, COMMON
from .test_evalmetrics import TRIPLES
from .test_fluency import FixedLM, separable_buffer

DATA = Path(__file__).parent / "data"


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def close(a, b, tol):
    return a is not None and abs(a - b) <= tol


def test_criterion_01_score_formula_examples():
    t0 = time.perf_counter()
    table = ZipfTable({"vigorous": 3.54, "strong": 5.23})
    lex = ZipfTable(COMMON)
    checks = {
        "fkgl cat": close(fkgl(tokenize("The cat sat on the mat.")), -1.45, 1e-9),
        "fkgl ratios": close(0.39 * 10 + 11.8 * 1.5 - 15.59, 6.01, 1e-9),
        "tgt 3": target_delta(3.0) == 0.1,
        "tgt 10": close(target_delta(10.0), 3.1, 1e-9),
        "tgt 14": close(target_delta(14.0), 5.6, 1e-9),
        "tgt 4": close(target_delta(4.0), 0.1, 1e-9),
        "s peak": close(s_score_from_grades(10, 6.9), 1.0, 1e-9),
        "s zero": close(s_score_from_grades(10, 10), 0.0, 1e-9),
        "s half": close(s_score_from_grades(10, 8.45), 0.5, 1e-9),
        "dz vigorous": close(delta_z({"vigorous"}, {"strong"}, table), 1.69, 1e-9),
        "dz same": delta_z({"strong"}, {"strong"}, table) == 0.0,
        "dz anti": delta_z({"strong"}, {"vigorous"}, table) == -delta_z({"vigorous"}, {"strong"}, table),
        "l 0.4": ramp(0.4, 0.4) == 1.0,
        "l 0.6": close(ramp(0.6, 0.4), 0.5, 1e-9),
        "l 0.0": ramp(0.0, 0.4) == 0.0,
        "l vigorous": l_score({"vigorous"}, {"strong"}, table) == 0.0,
        "lm unigram": close(train_ngram_lm([tokenize("a a b")], 1, 0).avg_log_likelihood(
            tokenize("a b")), (math.log(2 / 3) + math.log(1 / 3)) / 2, 1e-6),
        "lm equal": lm_score_from_values(-4, -4, 1.3) == 1.0,
        "lm zero": close(lm_score_from_values(-4, -5.3, 1.3), 0.0, 1e-9),
        "lm half": close(lm_score_from_values(-4, -4.65, 1.3), 0.5, 1e-9),
        "calib 2.0": close(calibrate_lambda([(tokenize("p"), tokenize("q"))],
                                            FixedLM({"p": -3.0, "q": -4.0}), 0.5), 2.0, 1e-3),
        "d zero": d_score("any text", Discriminator()) == 0.5,
        "mask mars": mask(tokenize("Mars is a red planet")).masked_words() == ["mars", "red", "planet"],
        "mask none": mask(tokenize("It is the one")).masked_positions == (),
        "cov self": coverage(tokenize("Mars is a red planet"), tokenize("Mars is a red planet")) == 1.0,
        "cov 2/3": close(coverage(tokenize("Mars is a red planet"), tokenize("Mars is red")), 2 / 3, 1e-9),
        "cov none": coverage(tokenize("Mars is a red planet"), tokenize("It is.")) == 0.0,
        "brev same": brevity(tokenize("a b c"), tokenize("a b c"))[0] is Verdict.PASS,
        "brev 0.5": brevity_verdict(0.5) is Verdict.TRIGGER,
        "brev 0.6": brevity_verdict(0.6) is Verdict.PASS,
        "ent la paz": inaccuracy(EntitySet(["la paz"]), EntitySet(["bolivia"]))[1] == {"bolivia"},
        "ent subset": inaccuracy(EntitySet(["a", "b"]), EntitySet(["a"]))[0] is Verdict.PASS,
        "ents": extract_entities(tokenize("NASA landed on Mars in 2021."), lex) == {"nasa", "mars", "2021"},
        "total ones": total_reward(1, 1, 1, 1, 1, True) == 1.0,
        "total guard": total_reward(1, 1, 1, 1, 1, False) == 0.0,
        "total 0.25": close(total_reward(0.5, 0.5, 1, 1, 1, True), 0.25, 1e-9),
    }
    p = "The city council postponed its decision on the controversial bridge project."
    rep = score_pair(p, p)
    checks["identity"] = (rep.s_score, rep.l_score, rep.lm_score, rep.coverage, rep.total) == (
        0.0, 0.0, 1.0, 1.0, 0.0)
    abl = score_pair(p, p, ScoreConfig().ablate("simplicity"))
    checks["ablated identity"] = abl.total > 0
    elapsed = time.perf_counter() - t0
    bad = [k for k, v in checks.items() if not v]
    record(1, not bad and elapsed < 1.0,
           f"{len(checks) - len(bad)}/{len(checks)} examples, {elapsed:.3f}s" +
           (f", failing: {bad}" if bad else ""))


def test_criterion_02_ramp_properties():
    t0 = time.perf_counter()
    rng = random.Random(2)
    ok = True
    for _ in range(1000):
        f0, f1 = rng.uniform(-5, 25), rng.uniform(-5, 25)
        tgt = target_delta(f0)
        s = s_score_from_grades(f0, f1)
        dz = rng.uniform(-8, 8)
        l = ramp(dz, 0.4)
        ok &= 0.0 <= s <= 1.0 and 0.0 <= l <= 1.0
        ok &= ramp(tgt, tgt) == 1.0 and ramp(0.4, 0.4) == 1.0
        d = rng.uniform(0, tgt)
        ok &= abs(ramp(tgt + d, tgt) - ramp(tgt - d, tgt)) <= 1e-9
        e = rng.uniform(0, 0.4)
        ok &= abs(ramp(0.4 + e, 0.4) - ramp(0.4 - e, 0.4)) <= 1e-9
        # the grade-level form peaks at the target drop
        ok &= abs(s_score_from_grades(f0, f0 - tgt) - 1.0) <= 1e-9
    elapsed = time.perf_counter() - t0
    record(2, ok and elapsed < 1.0, f"1000 draws, {elapsed:.3f}s")


def test_criterion_03_guardrail_boundaries():
    got = [brevity_verdict(c) for c in (0.599, 0.6, 1.5, 1.501)]
    want = [Verdict.TRIGGER, Verdict.PASS, Verdict.PASS, Verdict.TRIGGER]
    lex = ZipfTable(COMMON)
    e1 = extract_entities(tokenize("He went to La Paz."), lex)
    e2 = extract_entities(tokenize("He went to Bolivia."), lex)
    sup = inaccuracy(e1, e1 | EntitySet(["bolivia"]))
    sub = inaccuracy(e1 | EntitySet(["bolivia"]), e1)
    ok = (got == want and inaccuracy(e1, e2)[0] is Verdict.TRIGGER and
          inaccuracy(e1, e2)[1] == {"bolivia"} and sup[0] is Verdict.TRIGGER and
          sub[0] is Verdict.PASS)
    record(3, ok, f"brevity {[v.value for v in got]}, La Paz->Bolivia "
                  f"{inaccuracy(e1, e2)[0].value}, subset {sub[0].value}")


def test_criterion_04_coverage_properties():
    rng = random.Random(4)
    vocab = ["council", "approved", "budget", "the", "of", "river", "flooded", "towns", "and",
             "residents", "were", "moved", "in", "March", "2020", "said", "it", "a", "storm"]
    self_ok = mono_ok = True
    for _ in range(100):
        words = [rng.choice(vocab) for _ in range(rng.randint(5, 40))]
        words[0] = "council"  # at least one maskable word
        p = tokenize(" ".join(words) + ".")
        self_ok &= coverage(p, p) == 1.0
        q_words = [rng.choice(vocab) for _ in range(rng.randint(1, 20))]
        q = tokenize(" ".join(q_words))
        extra = rng.choice(mask(p).masked_words())
        mono_ok &= coverage(p, tokenize(" ".join(q_words + [extra]))) >= coverage(p, q)
    text = resources.files("kisimple").joinpath("data", "news_sample.txt").read_text("utf-8")
    docs = [tokenize(line) for line in text.splitlines() if line.strip()]
    rate = sum(mask_rate(d) for d in docs) / len(docs)
    record(4, self_ok and mono_ok and 0.30 <= rate <= 0.50,
           f"self-coverage {self_ok}, monotone {mono_ok}, news mask rate {rate:.3f}")


def test_criterion_05_discriminator_protocol():
    t0 = time.perf_counter()
    buf = separable_buffer()
    assert len(buf) == 2000
    d1 = retrain_discriminator(buf, seed=5)
    drained = len(buf) == 0
    d2 = retrain_discriminator(separable_buffer(), seed=5)
    same = np.array_equal(d1.weights, d2.weights) and d1.bias == d2.bias
    best = d1.checkpoint_f1[d1.selected_epoch - 1]
    elapsed = time.perf_counter() - t0
    ok = (best == 1.0 and best == max(d1.checkpoint_f1) and len(d1.checkpoint_f1) == 5
          and drained and same and elapsed < 30)
    record(5, ok, f"F1 per epoch {d1.checkpoint_f1}, selected epoch {d1.selected_epoch}, "
                  f"drained {drained}, deterministic {same}, {elapsed:.2f}s")


def test_criterion_06_sari_bleu_oracle():
    mism = []
    for orig, out, refs in TRIPLES:
        if sari(orig, out, refs) != oracles.sari(orig, out, refs):
            mism.append(("sari", orig))
        if bleu(out, refs) != oracles.bleu(out, refs):
            mism.append(("bleu", orig))
    identity = sari("the feline sat", "the cat sat", ["the cat sat"]) == 1.0 and bleu(
        "the cat sat on the mat", ["the cat sat on the mat"]) == 1.0
    record(6, not mism and identity and len(TRIPLES) == 10,
           f"{len(TRIPLES)} triples exact, output=reference -> 1.0: {identity}")


def test_criterion_07_gradient_correctness():
    from .test_kscst import DOC, REWARDS, TABLE, THETA, fd_gradient
    t0 = time.perf_counter()
    pol = ToyLexicalPolicy(TABLE, THETA)
    rng = np.random.default_rng(12345)
    acc = np.zeros(3)
    n = 100_000
    for _ in range(n):
        c = pol.sample(DOC, rng)
        acc += REWARDS[c.tokens[0]] * c.grad
    est, fd = acc / n, fd_gradient(THETA)
    rel = np.abs(est - fd) / np.abs(fd)
    g = np.random.default_rng(1)
    equal = CandidateBatch(None, [Candidate([], [-1.0], 0.37, grad=g.normal(size=3))
                                  for _ in range(8)])
    zero = bool(np.all(kscst_gradient(equal) == 0.0)) and kscst_loss(equal) == 0.0
    rewards = [0.125, 0.5, 0.875, 0.25]
    logps = [[-0.5], [-1.25], [-2.0], [-0.75]]
    b0 = CandidateBatch(None, [Candidate([], lp, r) for r, lp in zip(rewards, logps)])
    b1 = CandidateBatch(None, [Candidate([], lp, r + 0.375) for r, lp in zip(rewards, logps)])
    shift = kscst_loss(b0) == kscst_loss(b1)
    elapsed = time.perf_counter() - t0
    record(7, bool(np.all(rel < 0.02)) and zero and shift and elapsed < 60,
           f"max rel err {rel.max():.4f}, zero-grad {zero}, shift-invariant {shift}, "
           f"{elapsed:.1f}s")


@pytest.fixture(scope="module")
def k_comparison():
    t0 = time.perf_counter()
    table = bundled_substitutions()
    res = compare_k([2, 8], list(range(6)), bundled_toy_inputs(),
                    lambda: ToyLexicalPolicy(table), KisRewardFn(ScoreConfig()), steps=500)
    return res, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_08_increasing_k_trend(k_comparison):
    res, elapsed = k_comparison
    m2, s2 = res.final(2)
    m8, s8 = res.final(8)
    record(8, m8 > m2 and s8 <= s2 and elapsed < 600,
           f"final mean k=8 {m8:.3f} (SEM {s8:.4f}) vs k=2 {m2:.3f} (SEM {s2:.4f}), "
           f"{elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_09_toy_learning_and_ablation(k_comparison):
    res, _ = k_comparison
    runs = np.array([t.mean_reward for t in res.traces[8]])
    start, final = runs[:, 0].mean(), runs[:, -1].mean()
    gain = (final - start) / start
    # ablation: identical candidates scored with and without the simplicity factor
    full, abl = KisRewardFn(ScoreConfig()), KisRewardFn(ScoreConfig().ablate("simplicity"))
    pol = ToyLexicalPolicy(bundled_substitutions())
    rng = np.random.default_rng(0)
    ab_ok, n = True, 0
    for doc in bundled_toy_inputs():
        for _ in range(25):
            c = pol.sample(doc, rng)
            ab_ok &= abl(doc, c) >= full(doc, c)
            n += 1
    record(9, gain >= 0.20 and ab_ok,
           f"mean reward step 0 {start:.3f} -> final {final:.3f} ({gain:+.0%}), "
           f"ablation >= full on {n} candidates: {ab_ok}")


def test_criterion_10_cli_golden_files(tmp_path):
    cfg = str(DATA / "golden.cfg")
    outs = []
    for i in range(2):
        s, e = tmp_path / f"s{i}.jsonl", tmp_path / f"e{i}.json"
        for cmd, inp, out in (("score", "score_fixture.jsonl", s),
                              ("evaluate", "eval_fixture.jsonl", e)):
            r = subprocess.run([sys.executable, "-m", "kisimple.cli", cmd, str(DATA / inp),
                                "--config", cfg, "--out", str(out)], capture_output=True)
            assert r.returncode == 0, r.stderr
        outs.append((s.read_bytes(), e.read_bytes()))
    golden = ((DATA / "score_golden.jsonl").read_bytes(), (DATA / "eval_golden.json").read_bytes())
    ok = outs[0] == outs[1] == golden
    json.loads(golden[1])
    record(10, ok, "score and evaluate reruns byte-identical to golden files" if ok
           else "golden mismatch")

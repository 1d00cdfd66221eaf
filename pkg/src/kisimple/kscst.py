"""SCST and k-SCST policy-gradient training.

The policy is abstract: anything that can sample a candidate together with
the gradient of its summed step log-probabilities, decode greedily, and
apply a parameter update. :class:`kisimple.policy.ToyLexicalPolicy` is the
bundled implementation.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .errors import NonFiniteGradient

__all__ = [
    "Candidate",
    "CandidateBatch",
    "Policy",
    "TrainerConfig",
    "TrainingTrace",
    "scst_loss",
    "kscst_loss",
    "scst_gradient",
    "kscst_gradient",
    "train",
    "compare_k",
    "write_compare_csv",
]

log = logging.getLogger(__name__)


@dataclass
class Candidate:
    tokens: list
    step_logps: list
    reward: float = 0.0
    text: str = ""
    # gradient of sum(step_logps) with respect to the policy parameters
    grad: Optional[np.ndarray] = None

    @property
    def logp(self) -> float:
        return math.fsum(self.step_logps)


@dataclass
class CandidateBatch:
    input: object
    candidates: list

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise ValueError("a k-SCST batch needs at least two candidates")

    @property
    def mean_reward(self) -> float:
        return math.fsum(c.reward for c in self.candidates) / len(self.candidates)


class Policy(Protocol):
    params: np.ndarray

    def sample(self, input, rng: np.random.Generator) -> Candidate: ...

    def greedy(self, input) -> Candidate: ...

    def update(self, gradient: np.ndarray, learning_rate: float) -> None: ...


def scst_loss(sampled: Candidate, greedy: Candidate) -> float:
    """Greedy-baseline loss: ``(R_greedy - R_sampled) * sum log p(sampled)``."""
    return (greedy.reward - sampled.reward) * sampled.logp


def kscst_loss(batch: CandidateBatch, leave_one_out: bool = False) -> float:
    """Mean-baseline loss summed over the k sampled candidates."""
    return math.fsum(a * c.logp for a, c in zip(_coefficients(batch, leave_one_out), batch.candidates))


def _coefficients(batch: CandidateBatch, leave_one_out: bool) -> list:
    # mean of pairwise differences rather than mean(R) - R_j: exactly zero when
    # rewards are equal, and unaffected by a constant shift of all rewards
    rewards = [c.reward for c in batch.candidates]
    k = len(rewards)
    denom = k - 1 if leave_one_out else k
    # leave-one-out drops i == j, which contributes 0 anyway; only the divisor
    # changes, trading the self-inclusive bias for a k/(k-1) scale
    return [math.fsum(ri - rj for ri in rewards) / denom for rj in rewards]


def scst_gradient(sampled: Candidate, greedy: Candidate) -> np.ndarray:
    return (greedy.reward - sampled.reward) * sampled.grad


def kscst_gradient(batch: CandidateBatch, leave_one_out: bool = False) -> np.ndarray:
    grad = np.zeros_like(batch.candidates[0].grad)
    for a, c in zip(_coefficients(batch, leave_one_out), batch.candidates):
        if a != 0.0:
            grad += a * c.grad
    return grad


@dataclass(frozen=True)
class TrainerConfig:
    k: int = 8
    learning_rate: float = 0.5
    steps: int = 500
    seed: int = 0
    algorithm: str = "kscst"
    leave_one_out: bool = False

    def __post_init__(self):
        if self.algorithm not in ("scst", "kscst"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == "kscst" and self.k < 2:
            raise ValueError("k-SCST needs k >= 2")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")

    @property
    def baseline(self) -> str:
        return "greedy" if self.algorithm == "scst" else ("leave-one-out" if self.leave_one_out else "mean")

    @property
    def effective_k(self) -> int:
        return 2 if self.algorithm == "scst" else self.k


@dataclass
class TrainingTrace:
    config: TrainerConfig
    mean_reward: list = field(default_factory=list)
    # steps whose loss coefficients were all zero (no learning signal)
    wasted_steps: int = 0

    @property
    def wasted_fraction(self) -> float:
        return self.wasted_steps / len(self.mean_reward) if self.mean_reward else 0.0

    def header(self) -> list:
        c = self.config
        return [f"algorithm={c.algorithm}", f"baseline={c.baseline}", f"k={c.effective_k}",
                f"seed={c.seed}", f"steps={c.steps}", f"learning_rate={c.learning_rate!r}",
                f"wasted_fraction={self.wasted_fraction!r}"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for h in self.header():
            buf.write(f"# {h}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "k", "seed", "mean_reward"])
        for step, r in enumerate(self.mean_reward):
            w.writerow([step, self.config.effective_k, self.config.seed, repr(r)])
        return buf.getvalue()


RewardFn = Callable[[object, Candidate], float]


def train(policy: Policy, inputs: Sequence, reward_fn: RewardFn, cfg: TrainerConfig) -> TrainingTrace:
    """Run ``cfg.steps`` policy-gradient updates, cycling through ``inputs``.

    Each step draws k samples (k-SCST) or one sample plus the greedy decode
    (SCST), scores them with ``reward_fn(input, candidate)``, and applies a
    single SGD step on the summed loss. The trace stores the mean reward of
    the sampled candidates at every step.
    """
    if not inputs:
        raise ValueError("no training inputs")
    rng = np.random.default_rng(cfg.seed)
    trace = TrainingTrace(cfg)
    for step in range(cfg.steps):
        inp = inputs[step % len(inputs)]
        if cfg.algorithm == "scst":
            sampled = policy.sample(inp, rng)
            base = policy.greedy(inp)
            sampled.reward = reward_fn(inp, sampled)
            base.reward = reward_fn(inp, base)
            grad = scst_gradient(sampled, base)
            signal = base.reward != sampled.reward
            trace.mean_reward.append(sampled.reward)
        else:
            cands = [policy.sample(inp, rng) for _ in range(cfg.k)]
            for c in cands:
                c.reward = reward_fn(inp, c)
            batch = CandidateBatch(inp, cands)
            grad = kscst_gradient(batch, cfg.leave_one_out)
            signal = any(c.reward != cands[0].reward for c in cands)
            trace.mean_reward.append(batch.mean_reward)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradient(
                f"non-finite gradient at step {step} (input #{step % len(inputs)}; "
                f"rewards {trace.mean_reward[-1]!r})"
            )
        if not signal:
            trace.wasted_steps += 1
        policy.update(grad, cfg.learning_rate)
    return trace


@dataclass
class CompareResult:
    """Per-(k, step) mean reward across seeds and its standard error."""

    ks: list
    seeds: list
    steps: int
    algorithm: str
    traces: dict  # k -> list of TrainingTrace, one per seed

    def mean(self, k) -> np.ndarray:
        return np.array([t.mean_reward for t in self.traces[k]]).mean(axis=0)

    def sem(self, k) -> Optional[np.ndarray]:
        runs = np.array([t.mean_reward for t in self.traces[k]])
        if runs.shape[0] < 2:
            return None
        return runs.std(axis=0, ddof=1) / math.sqrt(runs.shape[0])

    def final(self, k) -> tuple:
        sem = self.sem(k)
        return float(self.mean(k)[-1]), (None if sem is None else float(sem[-1]))


def compare_k(ks: Sequence[int], seeds: Sequence[int], inputs: Sequence,
              policy_factory: Callable[[], Policy], reward_fn: RewardFn, steps: int,
              learning_rate: float = 0.5, algorithm: str = "kscst") -> CompareResult:
    """Train one fresh policy per (k, seed) and collect the reward trajectories."""
    traces = {}
    for k in ks:
        traces[k] = []
        for seed in seeds:
            cfg = TrainerConfig(k=k, learning_rate=learning_rate, steps=steps, seed=seed,
                                algorithm=algorithm)
            trace = train(policy_factory(), inputs, reward_fn, cfg)
            log.info("k=%s seed=%s final=%.4f wasted=%.3f", k, seed,
                     trace.mean_reward[-1] if trace.mean_reward else float("nan"),
                     trace.wasted_fraction)
            traces[k].append(trace)
    return CompareResult(list(ks), list(seeds), steps, algorithm, traces)


def write_compare_csv(result: CompareResult) -> str:
    buf = io.StringIO()
    buf.write(f"# algorithm={result.algorithm}\n")
    buf.write(f"# seeds={','.join(map(str, result.seeds))}\n")
    buf.write(f"# steps={result.steps}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "step", "mean_reward", "sem", "n_seeds"])
    for k in result.ks:
        mean = result.mean(k)
        sem = result.sem(k)
        for step in range(result.steps):
            w.writerow([k, step, repr(float(mean[step])),
                        "" if sem is None else repr(float(sem[step])), len(result.seeds)])
    return buf.getvalue()

"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import KisError
from .evalmetrics import EvalRecord, corpus_report
from .fluency import Discriminator, NGramLM, calibrate_lambda, train_ngram_lm
from .guardrails import BrevityBounds
from .kscst import TrainerConfig, compare_k, train, write_compare_csv
from .policy import (KisRewardFn, ToyLexicalPolicy, bundled_substitutions,
                     bundled_toy_inputs, load_substitutions)
from .reward import COMPONENTS, ScoreConfig, score_pair
from .simplicity import SimplicityConfig, ZipfTable
from .textproc import StopwordList, tokenize

log = logging.getLogger("kisimple")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _int_list(text: str) -> tuple:
    try:
        vals = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ValueError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not vals:
        raise ValueError("empty list")
    return vals


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _names(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


@dataclass
class RunConfig:
    """Flat settings shared by all commands; file keys use the field names."""

    lam: float = 1.3
    brevity_min: float = 0.6
    brevity_max: float = 1.5
    target_zipf_shift: float = 0.4
    ablate: tuple = ()
    lm: Optional[str] = None
    discriminator: Optional[str] = None
    lexicon: Optional[str] = None
    stopwords: Optional[str] = None
    seed: int = 0
    k: Optional[tuple] = None
    steps: int = 500
    learning_rate: float = 0.5
    algorithm: str = "kscst"
    leave_one_out: bool = False
    seeds: int = 6
    order: int = 3
    add_k: float = 0.1
    target: float = 0.9
    substitutions: Optional[str] = None
    inputs: Optional[str] = None

    # config-file key -> parser; "lambda" is accepted as an alias of lam
    _PARSERS = {
        "lam": float, "brevity_min": float, "brevity_max": float, "target_zipf_shift": float,
        "ablate": _names, "lm": str, "discriminator": str, "lexicon": str, "stopwords": str,
        "seed": int, "k": _int_list, "steps": int, "learning_rate": float, "algorithm": str,
        "leave_one_out": _bool, "seeds": int, "order": int, "add_k": float, "target": float,
        "substitutions": str, "inputs": str,
    }

    @classmethod
    def parse_file(cls, text: str, source: str = "config") -> dict:
        out = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{source}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = "lam" if key == "lambda" else key
            if key not in cls._PARSERS:
                raise UsageError(f"{source}:{lineno}: unknown config key {key!r}")
            try:
                out[key] = cls._PARSERS[key](value)
            except ValueError as exc:
                raise UsageError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
        return out

    def merged(self, overrides: dict) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def score_config(self) -> ScoreConfig:
        try:
            cfg = ScoreConfig(
                lam=self.lam,
                simplicity=SimplicityConfig(target_zipf_shift=self.target_zipf_shift),
                brevity_bounds=BrevityBounds(self.brevity_min, self.brevity_max),
                lm=NGramLM.load(self.lm) if self.lm else None,
                disc=Discriminator.load(self.discriminator) if self.discriminator else None,
                lexicon=ZipfTable.load(self.lexicon) if self.lexicon else None,
                stopwords=StopwordList.load(self.stopwords) if self.stopwords else None,
            )
            return cfg.ablate(*self.ablate)
        except (KisError, OSError) as exc:
            raise DataError(str(exc)) from exc
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value settings file; flags win")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--ablate", action="append", choices=COMPONENTS,
                   help="disable a reward component (repeatable)")
    p.add_argument("--lm", help="serialized language model")
    p.add_argument("--discriminator", help="serialized discriminator")
    p.add_argument("--lexicon", help="word<TAB>zipf table")
    p.add_argument("--stopwords", help="stopword list, one per line")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kisimple", description="Score, train and evaluate text simplification.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="score (original, simplified) pairs from JSONL")
    p.add_argument("input")
    p.add_argument("--coverage-scores", help="JSONL of {id, coverage} overriding the cloze model")
    _common(p)

    p = sub.add_parser("evaluate", help="corpus metrics over JSONL records")
    p.add_argument("input")
    p.add_argument("--coverage-scores")
    p.add_argument("--sari", action="store_true",
                   help="require reference metrics (fails when no record has references)")
    _common(p)

    p = sub.add_parser("build-lm", help="train an n-gram LM, one document per line")
    p.add_argument("corpus")
    p.add_argument("--order", type=int)
    p.add_argument("--add-k", dest="add_k", type=float)
    _common(p)

    p = sub.add_parser("calibrate-lambda", help="fit lambda to a target mean LM score")
    p.add_argument("pairs", help="JSONL with original and simplified fields")
    p.add_argument("--target", type=float)
    _common(p)

    for name, hlp in (("train-toy", "train the toy substitution policy"),
                      ("compare-scst", "mean reward curves across k and seeds")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--k", type=_int_list, help="comma-separated list")
        p.add_argument("--steps", type=int)
        p.add_argument("--lr", dest="learning_rate", type=float)
        p.add_argument("--algorithm", choices=("scst", "kscst"))
        p.add_argument("--leave-one-out", dest="leave_one_out", action="store_const", const=True)
        p.add_argument("--substitutions", help="complex<TAB>cand,cand table")
        p.add_argument("--inputs", help="training paragraphs, one per line")
        if name == "compare-scst":
            p.add_argument("--seeds", type=int, help="number of seeds, starting at --seed")
        _common(p)
    return ap


# -- input helpers -----------------------------------------------------------


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 ({exc.reason})") from exc


def _jsonl(path: str):
    lines = _read_text(path).splitlines()
    rows = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise DataError(f"{path}:{lineno}: expected a JSON object")
        rows.append((lineno, obj))
    if not rows:
        raise DataError(f"{path}: no records")
    return rows


def _text_field(obj, key, path, lineno) -> str:
    if key not in obj:
        raise DataError(f"{path}:{lineno}: missing field {key!r}")
    v = obj[key]
    if not isinstance(v, str) or not v.strip():
        raise DataError(f"{path}:{lineno}: field {key!r} must be a non-empty string")
    return v


def read_records(path: str) -> list:
    recs = []
    for lineno, obj in _jsonl(path):
        original = _text_field(obj, "original", path, lineno)
        simplified = _text_field(obj, "simplified", path, lineno)
        refs = obj.get("references", [])
        if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
            raise DataError(f"{path}:{lineno}: 'references' must be a list of strings")
        rid = obj.get("id", str(lineno))
        recs.append(EvalRecord(str(rid), original, simplified, tuple(refs)))
    return recs


def read_coverage_scores(path: str) -> dict:
    scores = {}
    for lineno, obj in _jsonl(path):
        try:
            rid, val = str(obj["id"]), float(obj["coverage"])
        except (KeyError, TypeError, ValueError):
            raise DataError(f"{path}:{lineno}: expected {{\"id\": ..., \"coverage\": number}}") from None
        if not 0.0 <= val <= 1.0:
            raise DataError(f"{path}:{lineno}: coverage {val!r} outside [0, 1]")
        scores[rid] = val
    return scores


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, allow_nan=False)


# -- commands ----------------------------------------------------------------


def cmd_score(args, rc: RunConfig) -> int:
    cfg = rc.score_config()
    recs = read_records(args.input)
    cov = read_coverage_scores(args.coverage_scores) if args.coverage_scores else {}
    lines = []
    for lineno, rec in enumerate(recs, 1):
        try:
            rep = score_pair(rec.original, rec.output, cfg, coverage_override=cov.get(rec.id))
        except KisError as exc:
            raise DataError(f"{args.input}: record {rec.id!r}: {exc}") from exc
        lines.append(_dumps({"id": rec.id, **rep.to_dict()}) + "\n")
    _emit("".join(lines), args.out)
    return EXIT_OK


def cmd_evaluate(args, rc: RunConfig) -> int:
    cfg = rc.score_config()
    recs = read_records(args.input)
    cov = read_coverage_scores(args.coverage_scores) if args.coverage_scores else None
    want_refs = args.sari or any(r.references for r in recs)
    report = corpus_report(recs, cfg, reference_metrics=want_refs, coverage_scores=cov)
    _emit(_dumps(report.to_dict()) + "\n", args.out)
    return EXIT_OK


def cmd_build_lm(args, rc: RunConfig) -> int:
    if not args.out:
        raise UsageError("build-lm needs --out")
    docs = [tokenize(line) for line in _read_text(args.corpus).splitlines() if line.strip()]
    lm = train_ngram_lm(docs, order=rc.order, add_k=rc.add_k)
    lm.save(args.out)
    log.info("wrote %s (order=%d, |V|=%d)", args.out, lm.order, len(lm.vocab))
    return EXIT_OK


def cmd_calibrate_lambda(args, rc: RunConfig) -> int:
    cfg = rc.score_config()
    pairs = [(tokenize(r.original), tokenize(r.output)) for r in read_records(args.pairs)]
    lam = calibrate_lambda(pairs, cfg.language_model, target_mean=rc.target)
    _emit(_dumps({"lambda": lam, "target": rc.target, "n_pairs": len(pairs)}) + "\n", args.out)
    return EXIT_OK


def _toy_setup(rc: RunConfig):
    table = load_substitutions(rc.substitutions) if rc.substitutions else bundled_substitutions()
    if rc.inputs:
        inputs = [tokenize(x) for x in _read_text(rc.inputs).splitlines() if x.strip()]
    else:
        inputs = bundled_toy_inputs()
    if not inputs:
        raise DataError("no training inputs")
    return table, inputs, KisRewardFn(rc.score_config())


def cmd_train_toy(args, rc: RunConfig) -> int:
    ks = rc.k or (8,)
    if len(ks) != 1:
        raise UsageError("train-toy takes a single --k")
    table, inputs, reward_fn = _toy_setup(rc)
    try:
        tcfg = TrainerConfig(k=ks[0], learning_rate=rc.learning_rate, steps=rc.steps,
                             seed=rc.seed, algorithm=rc.algorithm, leave_one_out=rc.leave_one_out)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    trace = train(ToyLexicalPolicy(table), inputs, reward_fn, tcfg)
    _emit(trace.to_csv(), args.out)
    return EXIT_OK


def cmd_compare_scst(args, rc: RunConfig) -> int:
    ks = rc.k or (2, 4, 6, 8)
    if rc.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    if rc.algorithm == "kscst" and min(ks) < 2:
        raise UsageError("k-SCST needs every k >= 2")
    table, inputs, reward_fn = _toy_setup(rc)
    seeds = list(range(rc.seed, rc.seed + rc.seeds))
    result = compare_k(ks, seeds, inputs, lambda: ToyLexicalPolicy(table), reward_fn,
                       steps=rc.steps, learning_rate=rc.learning_rate, algorithm=rc.algorithm)
    _emit(write_compare_csv(result), args.out)
    return EXIT_OK


COMMANDS = {
    "score": cmd_score,
    "evaluate": cmd_evaluate,
    "build-lm": cmd_build_lm,
    "calibrate-lambda": cmd_calibrate_lambda,
    "train-toy": cmd_train_toy,
    "compare-scst": cmd_compare_scst,
}

_FLAG_KEYS = ("seed", "lam", "lm", "discriminator", "lexicon", "stopwords", "order", "add_k",
              "target", "k", "steps", "learning_rate", "algorithm", "leave_one_out", "seeds",
              "substitutions", "inputs")


def run_config(args) -> RunConfig:
    rc = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"{args.config}: {exc.strerror or exc}") from exc
        rc = rc.merged(RunConfig.parse_file(text, args.config))
    flags = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    if args.ablate:
        flags["ablate"] = tuple(args.ablate)
    return rc.merged(flags)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, run_config(args))
    except UsageError as exc:
        print(f"kisimple: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, KisError, OSError) as exc:
        print(f"kisimple: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        log.debug("internal error", exc_info=True)
        print(f"kisimple: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

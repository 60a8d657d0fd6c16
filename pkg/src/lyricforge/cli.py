"""Command-line entry point: ``lyricforge <command> ...``.

Exit status is 0 on success, 1 for domain errors (bad input files,
infeasible lines) and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .constraint import ConstraintProgram, compile_constraints
from .decode import DecoderConfig, LyricSheet, generate_lyrics
from .errors import LyricforgeError
from .lm import load_corpus, load_model_file, save_model_file, select_model_path, train_ngram
from .melody import Melody, parse_melody_json, segment_phrases
from .metrics import evaluate
from .midi import parse_midi
from .phonetics import load_dictionary_file
from .plan import GenerationRequest, extract_keywords, make_plan

DICT_ENV = "LYRICFORGE_DICT"


def _alpha(text: str) -> float:
    value = float(text)
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in [0, 1], got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _add_melody_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--melody", required=True, help="melody JSON file (or SMF with --midi)")
    p.add_argument("--midi", action="store_true", help="read --melody as a Standard MIDI File")
    p.add_argument("--track", type=_nonneg_int, default=0, help="MIDI track index (default 0)")
    p.add_argument("--gap-beats", type=_positive_float, default=1.0, help="rest length, in beats, that ends a phrase")
    p.add_argument("--band", type=_nonneg_float, default=0.05, help="relative wildcard band around the mean duration")
    p.add_argument("--mean", choices=("per_phrase", "global"), default="per_phrase")
    p.add_argument("--melisma", type=_positive_int, default=1, help="most notes one syllable may span")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyricforge", description="Melody-constrained lyric generation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a melody into a constraint program")
    _add_melody_args(p)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("generate", help="generate lyrics for a melody")
    _add_melody_args(p)
    p.add_argument("--title", required=True)
    p.add_argument("--keywords", required=True, help="comma-separated salient words")
    p.add_argument("--genre", default="")
    p.add_argument("--lm", required=True, help="model file, or a directory of <genre>.lyfng files")
    p.add_argument("--dict", dest="dict_path", default=os.environ.get(DICT_ENV))
    p.add_argument("--rhythm", choices=("off", "soft", "hard"), default="soft")
    p.add_argument("--alpha", type=_alpha, default=0.01)
    p.add_argument("--beam", type=_positive_int, default=8)
    p.add_argument("--top-k", type=_positive_int, default=50)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--policy", choices=("strict", "lenient"), default="lenient", help="monosyllable stress policy")
    p.add_argument("--boost", type=float, default=5.0, help="score multiplier for unused planned keywords")
    p.add_argument("--strategy", choices=("beam", "sample"), default="beam")
    p.add_argument("--keywords-per-line", type=_nonneg_int, default=1)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("score", help="evaluate a lyric sheet against its melody")
    p.add_argument("--lyrics", required=True)
    _add_melody_args(p)
    p.add_argument("--dict", dest="dict_path", default=os.environ.get(DICT_ENV))
    p.add_argument("--keywords", default=None, help="comma-separated salient words")
    p.add_argument("--reference", default=None, help="reference lyrics, one line per text line")
    p.add_argument("--lm", default=None, help="model used for perplexity")
    p.add_argument("--scope", choices=("all", "non_wildcard"), default="non_wildcard")

    p = sub.add_parser("extract-keywords", help="rank salient words of a text")
    p.add_argument("--text", required=True)
    p.add_argument("--count", type=_positive_int, default=3)

    p = sub.add_parser("train-lm", help="train an n-gram model on a lyrics corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=_positive_int, required=True)
    p.add_argument("--k", type=_nonneg_float, default=0.01)
    p.add_argument("-o", "--output", required=True)
    return parser


def _load_melody(args) -> Melody:
    if args.midi:
        with open(args.melody, "rb") as fh:
            melody = parse_midi(fh, args.track)
    else:
        with open(args.melody, encoding="utf-8") as fh:
            melody = parse_melody_json(fh)
    gap = max(1, round(args.gap_beats * melody.ticks_per_beat))
    return segment_phrases(melody, gap)


def _program(args) -> ConstraintProgram:
    return compile_constraints(_load_melody(args), args.mean, args.band, args.melisma)


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _words(csv: Optional[str]) -> list[str]:
    return [w.strip() for w in (csv or "").split(",") if w.strip()]


def _cmd_compile(args, parser) -> None:
    _write(args.output, _program(args).to_json())


def _cmd_generate(args, parser) -> None:
    if not args.dict_path:
        parser.error(f"--dict is required (or set {DICT_ENV})")
    try:
        config = DecoderConfig(
            alpha=args.alpha,
            rhythm_mode=args.rhythm,
            beam_width=args.beam,
            top_k=args.top_k,
            seed=args.seed,
            monosyllable_policy=args.policy,
            keyword_boost=args.boost,
            strategy=args.strategy,
        )
        request = GenerationRequest(args.title, tuple(_words(args.keywords)), args.genre, args.seed)
    except ValueError as exc:
        parser.error(str(exc))
    dictionary = load_dictionary_file(args.dict_path)
    model = load_model_file(select_model_path(args.lm, args.genre))
    program = _program(args)
    plan = make_plan(request, program, dictionary, args.keywords_per_line)
    sheet = generate_lyrics(plan, program, model, dictionary, config)
    _write(args.output, sheet.to_json())


def _cmd_score(args, parser) -> None:
    if not args.dict_path:
        parser.error(f"--dict is required (or set {DICT_ENV})")
    dictionary = load_dictionary_file(args.dict_path)
    with open(args.lyrics, encoding="utf-8") as fh:
        sheet = LyricSheet.from_json(fh)
    references = None
    if args.reference:
        references = [l.split() for l in load_corpus(args.reference) if l.strip()]
    model = load_model_file(args.lm) if args.lm else None
    report = evaluate(
        sheet,
        _program(args),
        dictionary,
        salient_words=_words(args.keywords) or None,
        references=references,
        model=model,
        model_label=f"n-gram {Path(args.lm).name}" if args.lm else "",
        scope=args.scope,
    )
    sys.stdout.write(report.to_json())


def _cmd_extract(args, parser) -> None:
    text = Path(args.text).read_text(encoding="utf-8")
    ranked = extract_keywords(text, args.count)
    sys.stdout.write(json.dumps([{"word": w, "score": s} for w, s in ranked], indent=2) + "\n")


def _cmd_train(args, parser) -> None:
    model = train_ngram(load_corpus(args.corpus), args.order, args.k)
    save_model_file(model, args.output)


COMMANDS = {
    "compile": _cmd_compile,
    "generate": _cmd_generate,
    "score": _cmd_score,
    "extract-keywords": _cmd_extract,
    "train-lm": _cmd_train,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (LyricforgeError, OSError, json.JSONDecodeError) as exc:
        print(f"lyricforge: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())

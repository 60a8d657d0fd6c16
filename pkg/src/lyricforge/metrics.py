"""Automatic evaluation of generated lyrics."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import asdict, dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence, Union

from .constraint import ConstraintProgram, RhythmToken
from .decode import LyricSheet, align_line, choose_pronunciation, syllable_note_counts
from .errors import InvalidInputError
from .lm import LanguageModel, perplexity
from .phonetics import PronouncingDictionary

Lines = Sequence[Sequence[str]]

_WORD = re.compile(r"[a-z0-9']+")


def tokenize(line: Union[str, Sequence[str]]) -> list[str]:
    if isinstance(line, str):
        return _WORD.findall(line.lower())
    return [t.lower() for t in line]


def _lines_of(lyrics: Union[LyricSheet, Lines, Sequence[str]]) -> list[list[str]]:
    if isinstance(lyrics, LyricSheet):
        return [list(l) for l in lyrics.lines]
    return [tokenize(l) for l in lyrics]


def salient_coverage(lyrics, salient_words: Sequence[str]) -> float:
    wanted = {w.strip().lower() for w in salient_words if w.strip()}
    if not wanted:
        raise InvalidInputError("salient word list is empty")
    present = {tok for line in _lines_of(lyrics) for tok in line}
    return len(wanted & present) / len(wanted)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def modified_precision(candidate: Sequence[str], reference: Sequence[str], n: int) -> tuple[int, int]:
    """Clipped n-gram matches and total candidate n-grams."""
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    clipped = sum(min(c, ref[g]) for g, c in cand.items())
    return clipped, sum(cand.values())


def brevity_penalty(candidate_len: int, reference_len: int) -> float:
    if candidate_len == 0:
        return 0.0
    if candidate_len < reference_len:
        return math.exp(1 - reference_len / candidate_len)
    return 1.0


def sentence_bleu(candidate: Sequence[str], reference: Sequence[str], max_n: int = 4) -> float:
    """BLEU with add-one smoothing on every n-gram precision; empty candidates score 0."""
    if not candidate:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        m, t = modified_precision(candidate, reference, n)
        log_sum += math.log((m + 1) / (t + 1))
    return brevity_penalty(len(candidate), len(reference)) * math.exp(log_sum / max_n)


def corpus_bleu(candidates: Lines, references: Lines, max_n: int = 4) -> float:
    matches = [0] * max_n
    totals = [0] * max_n
    c_len = r_len = 0
    for cand, ref in zip(candidates, references):
        c_len += len(cand)
        r_len += len(ref)
        for n in range(1, max_n + 1):
            m, t = modified_precision(cand, ref, n)
            matches[n - 1] += m
            totals[n - 1] += t
    if c_len == 0 or any(m == 0 and t > 0 for m, t in zip(matches, totals)):
        return 0.0
    # an order the candidates are too short to contain contributes precision 1
    log_sum = sum(math.log(m / t) for m, t in zip(matches, totals) if t > 0)
    return brevity_penalty(c_len, r_len) * math.exp(log_sum / max_n)


def bleu(candidates: Lines, references: Lines, mode: str = "corpus") -> float:
    """Corpus BLEU pools clipped counts; sentence mode averages per-line scores."""
    candidates = [tokenize(c) for c in candidates]
    references = [tokenize(r) for r in references]
    if len(candidates) != len(references):
        raise InvalidInputError(f"{len(candidates)} candidates vs {len(references)} references")
    if not candidates:
        raise InvalidInputError("nothing to score")
    if mode == "corpus":
        return corpus_bleu(candidates, references)
    if mode == "sentence":
        return sum(sentence_bleu(c, r) for c, r in zip(candidates, references)) / len(candidates)
    raise InvalidInputError(f"unknown BLEU mode {mode!r}")


def distinct_n(lines, n: int) -> float:
    """Unique over total n-grams, pooled over lines (n-grams never span a line break)."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    grams: Counter = Counter()
    for line in _lines_of(lines):
        grams.update(_ngrams(line, n))
    total = sum(grams.values())
    if total == 0:
        raise InvalidInputError(f"fewer than {n} tokens in every line")
    return len(grams) / total


@lru_cache(maxsize=None)
def cropped_terminators() -> frozenset:
    text = (resources.files("lyricforge") / "data" / "terminators.txt").read_text(encoding="utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def is_cropped(line: Union[str, Sequence[str]]) -> bool:
    tokens = tokenize(line)
    return bool(tokens) and tokens[-1] in cropped_terminators()


def cropped_ratio(lines) -> float:
    lines = _lines_of(lines)
    if not lines:
        raise InvalidInputError("no lines")
    return sum(is_cropped(l) for l in lines) / len(lines)


def _sung_pronunciations(sheet: LyricSheet, program: ConstraintProgram, dictionary: PronouncingDictionary):
    if sheet.pronunciations is not None:
        return sheet.pronunciations
    out = []
    for i, (words, line) in enumerate(zip(sheet.lines, program.lines)):
        prons, pos = [], 0
        for word in words:
            options = dictionary.lookup(word)
            if not options:
                raise InvalidInputError(f"line {i}: {word!r} is not in the dictionary")
            count = options[0].syllable_count
            same = [p for p in options if p.syllable_count == count]
            prons.append(choose_pronunciation(same, line.rhythm[pos:pos + count]))
            pos += count
        out.append(prons)
    return out


def stress_duration_rate(
    sheet: LyricSheet,
    program: ConstraintProgram,
    dictionary: PronouncingDictionary,
    scope: str = "non_wildcard",
) -> float:
    """Share of sung syllables whose stress matches the rhythm token of their first note.

    Under ``scope="all"`` wildcard tokens count as matches; under
    ``"non_wildcard"`` they are left out. With nothing to count the rate is 1.
    """
    if scope not in ("all", "non_wildcard"):
        raise InvalidInputError(f"unknown scope {scope!r}")
    if len(sheet.lines) != len(program.lines):
        raise InvalidInputError(f"sheet has {len(sheet.lines)} lines, program has {len(program.lines)}")
    prons = _sung_pronunciations(sheet, program, dictionary)
    offsets = program.line_offsets()
    hits = counted = 0
    for i, (line, line_prons) in enumerate(zip(program.lines, prons)):
        counts = [p.syllable_count for p in line_prons]
        try:
            expected = align_line(counts, line.syllable_budget, offsets[i])
        except InvalidInputError as exc:
            raise InvalidInputError(f"line {i}: {exc}") from None
        if sheet.alignment is not None:
            if i >= len(sheet.alignment) or sheet.alignment[i] != expected:
                raise InvalidInputError(f"line {i}: alignment does not match the program")
        per_syl = syllable_note_counts(sum(counts), line.syllable_budget)
        marks = [m for p in line_prons for m in p.stress_pattern]
        note = 0
        for mark, span in zip(marks, per_syl):
            token = line.rhythm[note]
            note += span
            if token is RhythmToken.ANY:
                if scope == "all":
                    hits += 1
                    counted += 1
                continue
            counted += 1
            hits += token.matches(mark)
    return hits / counted if counted else 1.0


@dataclass
class EvaluationReport:
    salient_coverage: Optional[float]
    sentence_bleu: Optional[float]
    corpus_bleu: Optional[float]
    dist1: float
    dist2: Optional[float]
    perplexity: Optional[float]
    cropped_ratio: float
    stress_duration_rate: float
    perplexity_model: Optional[str] = None

    def to_dict(self) -> dict:
        doc = asdict(self)
        if doc["perplexity"] is not None and math.isinf(doc["perplexity"]):
            doc["perplexity"] = None
            doc["perplexity_model"] = f"{self.perplexity_model} (infinite: zero-probability token)"
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def evaluate(
    sheet: LyricSheet,
    program: ConstraintProgram,
    dictionary: PronouncingDictionary,
    salient_words: Optional[Sequence[str]] = None,
    references: Optional[Lines] = None,
    model: Optional[LanguageModel] = None,
    model_label: str = "lyricforge n-gram",
    scope: str = "non_wildcard",
) -> EvaluationReport:
    """Fields that need missing inputs (keywords, references, a model) are None."""
    lines = sheet.lines
    try:
        dist2 = distinct_n(lines, 2)
    except InvalidInputError:
        dist2 = None
    return EvaluationReport(
        salient_coverage=salient_coverage(sheet, salient_words) if salient_words else None,
        sentence_bleu=bleu(lines, references, "sentence") if references else None,
        corpus_bleu=bleu(lines, references, "corpus") if references else None,
        dist1=distinct_n(lines, 1),
        dist2=dist2,
        perplexity=perplexity(model, lines) if model is not None else None,
        cropped_ratio=cropped_ratio(lines),
        stress_duration_rate=stress_duration_rate(sheet, program, dictionary, scope),
        perplexity_model=model_label if model is not None else None,
    )

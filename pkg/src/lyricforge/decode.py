"""Constrained lyric decoding over any LanguageModel.

Each line is searched separately, carrying the LM history across lines. A
line ends only with EOL once its syllable budget is used up exactly, so
budgets hold by construction. Rhythm alignment reweights a candidate's LM
probability by 1 when one of its pronunciations fits the rhythm slice and by
``alpha`` otherwise; ``alpha = 0`` (hard mode) removes it.

Before searching a line the decoder works out, for every syllable position,
whether the rest of the line can still be completed with the available
words. Candidates that would lead into a position with no completion are
never offered, so beams do not run into dead ends.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterable, Optional, Sequence, TextIO, Union

from .constraint import ConstraintProgram, LineConstraint, RhythmToken, format_rhythm, parse_rhythm, rhythm_satisfies
from .errors import InvalidInputError, LyricforgeError
from .lm import BOS, EOL, LanguageModel
from .phonetics import Pronunciation, PronouncingDictionary, StressMark
from .plan import Plan

RHYTHM_MODES = ("off", "soft", "hard")


class GenerationError(LyricforgeError):
    def __init__(self, line_index: int, message: str):
        super().__init__(f"line {line_index}: {message}")
        self.line_index = line_index


class ConfigurationError(LyricforgeError, ValueError):
    pass


@dataclass(frozen=True)
class DecoderConfig:
    alpha: float = 0.01
    rhythm_mode: str = "soft"
    beam_width: int = 8
    top_k: int = 50
    seed: int = 0
    monosyllable_policy: str = "lenient"
    keyword_boost: float = 5.0
    strategy: str = "beam"
    temperature: float = 1.0

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise InvalidInputError(f"alpha {self.alpha} outside [0, 1]")
        if self.rhythm_mode not in RHYTHM_MODES:
            raise InvalidInputError(f"unknown rhythm mode {self.rhythm_mode!r}")
        if self.rhythm_mode == "soft" and not 0 < self.alpha < 1:
            raise InvalidInputError("soft rhythm mode needs 0 < alpha < 1")
        if self.monosyllable_policy not in ("strict", "lenient"):
            raise InvalidInputError(f"unknown monosyllable policy {self.monosyllable_policy!r}")
        if self.strategy not in ("beam", "sample"):
            raise InvalidInputError(f"unknown strategy {self.strategy!r}")
        if self.beam_width < 1 or self.top_k < 1:
            raise InvalidInputError("beam_width and top_k must be positive")
        if self.seed < 0:
            raise InvalidInputError("seed must be non-negative")
        if self.keyword_boost < 1:
            raise InvalidInputError("keyword_boost must be at least 1")
        if self.temperature <= 0:
            raise InvalidInputError("temperature must be positive")

    @property
    def effective_alpha(self) -> float:
        return {"off": 1.0, "hard": 0.0}.get(self.rhythm_mode, self.alpha)


def apply_rhythm_factor(p: float, satisfies: bool, alpha: float) -> float:
    if not 0 <= alpha <= 1:
        raise InvalidInputError(f"alpha {alpha} outside [0, 1]")
    if not 0 <= p <= 1:
        raise InvalidInputError(f"probability {p} outside [0, 1]")
    return p if satisfies else alpha * p


def choose_pronunciation(prons: Sequence[Pronunciation], rhythm_slice: Sequence[RhythmToken]) -> Pronunciation:
    """First pronunciation matching the slice position by position, else the primary one."""
    for pron in prons:
        if pron.syllable_count == len(rhythm_slice) and rhythm_satisfies(pron.stress_pattern, rhythm_slice, "strict"):
            return pron
    return prons[0]


def word_satisfies(prons: Sequence[Pronunciation], rhythm_slice: Sequence[RhythmToken], policy: str) -> bool:
    return any(
        rhythm_satisfies(p.stress_pattern, rhythm_slice, policy)
        for p in prons
        if p.syllable_count == len(rhythm_slice)
    )


@lru_cache(maxsize=None)
def _fit(patterns: tuple[str, ...], rhythm_slice: str, policy: str) -> tuple[bool, int]:
    """Whether any same-length pattern satisfies the slice, and which one is sung."""
    tokens = parse_rhythm(rhythm_slice)
    marks = [tuple(StressMark(c) for c in pat) for pat in patterns]
    sat = any(rhythm_satisfies(m, tokens, policy) for m in marks)
    chosen = next((i for i, m in enumerate(marks) if rhythm_satisfies(m, tokens, "strict")), 0)
    return sat, chosen


@dataclass(frozen=True)
class DecodeState:
    line_index: int
    syllable_position: int = 0
    words: tuple[str, ...] = ()
    keywords_satisfied: tuple[bool, ...] = ()
    logprob: float = 0.0


def feasible_words(
    state: DecodeState,
    line: LineConstraint,
    dictionary: PronouncingDictionary,
    vocabulary: Iterable[str],
    config: DecoderConfig,
    min_syllables: Optional[int] = None,
) -> set[str]:
    """Words that may come next on the line, plus EOL when the line may end here."""
    if state.syllable_position > line.syllable_budget:
        raise InvalidInputError("state is past the end of the line")
    lowest = line.syllable_budget if min_syllables is None else min_syllables
    pos = state.syllable_position
    remaining = line.syllable_budget - pos
    out = set()
    for word in vocabulary:
        prons = dictionary.lookup(word)
        if not prons:
            continue
        count = prons[0].syllable_count
        if count == 0 or count > remaining:
            continue
        if config.rhythm_mode == "hard" and not word_satisfies(
            prons, line.rhythm[pos:pos + count], config.monosyllable_policy
        ):
            continue
        out.add(word)
    if pos >= lowest:
        out.add(EOL)
    return out


@dataclass
class LyricSheet:
    lines: list[list[str]]
    alignment: list[list[list[int]]]
    logprob: float
    pronunciations: Optional[list[list[Pronunciation]]] = None
    token_scores: list[list[float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"lines": self.lines, "alignment": self.alignment, "logprob": self.logprob}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @property
    def text(self) -> str:
        return "\n".join(" ".join(line) for line in self.lines)

    @classmethod
    def from_dict(cls, doc: Any) -> "LyricSheet":
        try:
            lines = [[str(w).lower() for w in line] for line in doc["lines"]]
            alignment = doc.get("alignment")
            if alignment is not None:
                alignment = [[[int(i) for i in word] for word in line] for line in alignment]
            return cls(lines, alignment, float(doc.get("logprob", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed lyric sheet: {exc}") from None

    @classmethod
    def from_json(cls, source: Union[TextIO, str]) -> "LyricSheet":
        text = source if isinstance(source, str) else source.read()
        return cls.from_dict(json.loads(text))


def syllable_note_counts(syllables: int, notes: int) -> list[int]:
    """Notes per syllable when a line's extra notes are dealt out left to right."""
    counts = [1] * syllables
    for j in range(notes - syllables):
        counts[j % syllables] += 1
    return counts


@dataclass(frozen=True)
class _Hyp:
    words: tuple[str, ...]
    position: int
    logprob: float
    prons: tuple[Pronunciation, ...]
    scores: tuple[float, ...]
    kw_done: frozenset

    def key(self):
        return (-self.logprob, self.words)


class _LinePlan:
    """Per-position candidate tables for one line under one configuration."""

    def __init__(self, line: LineConstraint, min_syllables: int, words: dict, config: DecoderConfig):
        budget = line.syllable_budget
        self.min_syllables = min_syllables
        hard = config.rhythm_mode == "hard"
        rhythm = format_rhythm(line.rhythm)
        # table[pos]: word -> (satisfies, sung pronunciation)
        table: list[dict[str, tuple[bool, Pronunciation]]] = [dict() for _ in range(budget + 1)]
        completable = [False] * (budget + 1)
        for pos in range(budget, -1, -1):
            if pos >= min_syllables:
                completable[pos] = True
            row = table[pos]
            for word, (count, prons, patterns) in words.items():
                end = pos + count
                if end > budget or not completable[end]:
                    continue
                sat, chosen = _fit(patterns, rhythm[pos:end], config.monosyllable_policy)
                if hard and not sat:
                    continue
                row[word] = (sat, prons[chosen])
                completable[pos] = True
        self.table = table
        self.completable = completable


class Decoder:
    def __init__(self, model: LanguageModel, dictionary: PronouncingDictionary, config: DecoderConfig):
        self.model = model
        self.dictionary = dictionary
        self.config = config
        self.words = {}
        for word in sorted(model.vocabulary):
            prons = dictionary.lookup(word)
            if not prons or prons[0].syllable_count == 0:
                continue
            count = prons[0].syllable_count
            same = tuple(p for p in prons if p.syllable_count == count)
            self.words[word] = (count, same, tuple(p.pattern_string for p in same))
        if not self.words:
            raise ConfigurationError("no LM vocabulary word is in the pronouncing dictionary")

    def _candidates(self, hyp: _Hyp, table: _LinePlan, history: list[str], keywords: Sequence[str], top_k: Optional[int]):
        cfg = self.config
        alpha = cfg.effective_alpha
        ctx = history + list(hyp.words)
        row = table.table[hyp.position]
        out = []
        if hyp.position >= table.min_syllables:
            p = self.model.prob(EOL, ctx)
            if p > 0:
                out.append((EOL, p, None))
        pending = [kw for kw in keywords if kw not in hyp.kw_done and kw in row]
        taken = 0
        seen = set()
        for word, p in self.model.ranked(ctx):
            if top_k is not None and taken >= top_k:
                break
            entry = row.get(word)
            if entry is None:
                continue
            taken += 1
            seen.add(word)
            out.append((word, p, entry))
        for kw in pending:
            if kw not in seen:
                p = self.model.prob(kw, ctx)
                if p > 0:
                    out.append((kw, p, row[kw]))
        scored = []
        for word, p, entry in out:
            if entry is None:
                scored.append((word, p, None))
                continue
            sat, pron = entry
            score = apply_rhythm_factor(p, sat, alpha)
            if word in pending:
                score *= cfg.keyword_boost
            if score > 0:
                scored.append((word, score, pron))
        return scored

    @staticmethod
    def _extend(hyp: _Hyp, word: str, score: float, pron: Optional[Pronunciation], keywords) -> _Hyp:
        if pron is None:
            return _Hyp(hyp.words, hyp.position, hyp.logprob + math.log(score), hyp.prons, hyp.scores + (score,), hyp.kw_done)
        done = hyp.kw_done | {word} if word in keywords else hyp.kw_done
        return _Hyp(
            hyp.words + (word,),
            hyp.position + pron.syllable_count,
            hyp.logprob + math.log(score),
            hyp.prons + (pron,),
            hyp.scores + (score,),
            done,
        )

    def _beam(self, table, history, keywords, top_k, beam_width):
        # hypotheses compete only against others that used the same number of syllables
        budget = len(table.table) - 1
        buckets: list[list[_Hyp]] = [[] for _ in range(budget + 1)]
        buckets[0].append(_Hyp((), 0, 0.0, (), (), frozenset()))
        finished = []
        for pos in range(budget + 1):
            buckets[pos].sort(key=_Hyp.key)
            for hyp in buckets[pos][:beam_width]:
                for word, score, pron in self._candidates(hyp, table, history, keywords, top_k):
                    nxt = self._extend(hyp, word, score, pron, keywords)
                    if word == EOL:
                        finished.append(nxt)
                    else:
                        buckets[nxt.position].append(nxt)
            buckets[pos] = []
        if not finished:
            return None
        return min(finished, key=_Hyp.key)

    def _sample(self, table, history, keywords, top_k, rng: random.Random):
        hyp = _Hyp((), 0, 0.0, (), (), frozenset())
        while True:
            cands = self._candidates(hyp, table, history, keywords, top_k)
            if not cands:
                return None
            weights = [s ** (1.0 / self.config.temperature) for _, s, _ in cands]
            word, score, pron = rng.choices(cands, weights=weights, k=1)[0]
            hyp = self._extend(hyp, word, score, pron, keywords)
            if word == EOL:
                return hyp

    def decode_line(self, index: int, line: LineConstraint, min_syllables: int, history: list[str], keywords, rng) -> _Hyp:
        table = _LinePlan(line, min_syllables, self.words, self.config)
        if not table.completable[0]:
            raise GenerationError(index, "no word sequence can fill this line")
        keywords = tuple(k for k in keywords)
        attempts = [(self.config.top_k, self.config.beam_width), (None, max(self.config.beam_width, 64))]
        for top_k, width in attempts:
            if self.config.strategy == "sample":
                hyp = self._sample(table, history, keywords, top_k, rng)
            else:
                hyp = self._beam(table, history, keywords, top_k, width)
            if hyp is not None:
                return hyp
        raise GenerationError(index, "every hypothesis has zero probability")

    def generate(self, plan: Plan, program: ConstraintProgram) -> LyricSheet:
        if len(plan.line_keywords) != len(program.lines):
            raise InvalidInputError(
                f"plan has {len(plan.line_keywords)} lines, program has {len(program.lines)}"
            )
        rng = random.Random(self.config.seed)
        history: list[str] = []
        lines, alignment, prons, scores = [], [], [], []
        total = 0.0
        offsets = program.line_offsets()
        for i, (line, keywords) in enumerate(zip(program.lines, plan.line_keywords)):
            history.append(BOS)
            hyp = self.decode_line(i, line, program.min_syllables(i), history, keywords, rng)
            history.extend(hyp.words)
            history.append(EOL)
            lines.append(list(hyp.words))
            prons.append(list(hyp.prons))
            scores.append(list(hyp.scores))
            total += hyp.logprob
            alignment.append(align_line([p.syllable_count for p in hyp.prons], line.syllable_budget, offsets[i]))
        return LyricSheet(lines, alignment, total, prons, scores)


def align_line(word_syllables: Sequence[int], notes: int, offset: int) -> list[list[int]]:
    """Global note indices covered by each word of a line."""
    syllables = sum(word_syllables)
    if syllables < 1 or syllables > notes:
        raise InvalidInputError(f"{syllables} syllables cannot cover {notes} notes")
    per_syl = syllable_note_counts(syllables, notes)
    out, cursor, s = [], offset, 0
    for count in word_syllables:
        span = sum(per_syl[s:s + count])
        out.append(list(range(cursor, cursor + span)))
        cursor += span
        s += count
    return out


def generate_lyrics(
    plan: Plan,
    program: ConstraintProgram,
    model: LanguageModel,
    dictionary: PronouncingDictionary,
    config: Optional[DecoderConfig] = None,
) -> LyricSheet:
    return Decoder(model, dictionary, config or DecoderConfig()).generate(plan, program)


def generate_truncated(
    program: ConstraintProgram,
    model: LanguageModel,
    dictionary: PronouncingDictionary,
    seed: int = 0,
    top_k: int = 50,
) -> list[list[str]]:
    """Naive baseline: sample words freely and cut each line once its budget is reached.

    Words the dictionary lacks are excluded and EOL is never chosen, so lines
    stop wherever the syllable count happens to run out.
    """
    rng = random.Random(seed)
    usable = {w for w in model.vocabulary if dictionary.primary(w) and dictionary.primary(w).syllable_count}
    history: list[str] = []
    lines = []
    for line in program.lines:
        history.append(BOS)
        words: list[str] = []
        used = 0
        while used < line.syllable_budget:
            ranked = [(w, p) for w, p in model.ranked(history) if w in usable][:top_k]
            word = rng.choices([w for w, _ in ranked], weights=[p for _, p in ranked], k=1)[0]
            words.append(word)
            history.append(word)
            used += dictionary.primary(word).syllable_count
        history.append(EOL)
        lines.append(words)
    return lines

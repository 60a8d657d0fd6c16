"""Compile a segmented melody into per-line syllable budgets and rhythm tokens."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Any, Sequence, TextIO, Union

from .errors import InvalidInputError, LyricforgeError
from .melody import Melody
from .phonetics import StressMark


class CompileError(LyricforgeError, ValueError):
    pass


class RhythmToken(enum.Enum):
    STRESSED = "S"
    UNSTRESSED = "U"
    ANY = "*"

    def matches(self, mark: StressMark) -> bool:
        if self is RhythmToken.ANY:
            return True
        return self.value == mark.value


def parse_rhythm(text: str) -> tuple[RhythmToken, ...]:
    try:
        return tuple(RhythmToken(c) for c in text)
    except ValueError:
        raise InvalidInputError(f"rhythm {text!r} may only contain S, U and *") from None


def format_rhythm(tokens: Sequence[RhythmToken]) -> str:
    return "".join(t.value for t in tokens)


@dataclass(frozen=True)
class LineConstraint:
    syllable_budget: int
    rhythm: tuple[RhythmToken, ...]

    def __post_init__(self):
        object.__setattr__(self, "rhythm", tuple(self.rhythm))
        if self.syllable_budget < 1:
            raise InvalidInputError("syllable budget must be positive")
        if len(self.rhythm) != self.syllable_budget:
            raise InvalidInputError(
                f"rhythm length {len(self.rhythm)} differs from budget {self.syllable_budget}"
            )


@dataclass(frozen=True)
class ConstraintProgram:
    lines: tuple[LineConstraint, ...]
    melisma_max: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        if self.melisma_max < 1:
            raise InvalidInputError("melisma_max must be at least 1")

    def min_syllables(self, line_index: int) -> int:
        """Fewest syllables that can cover the line when one syllable may hold several notes."""
        return math.ceil(self.lines[line_index].syllable_budget / self.melisma_max)

    @property
    def total_notes(self) -> int:
        return sum(line.syllable_budget for line in self.lines)

    def line_offsets(self) -> list[int]:
        """Index of each line's first note among the melody's pitched notes."""
        offsets, total = [], 0
        for line in self.lines:
            offsets.append(total)
            total += line.syllable_budget
        return offsets

    def to_dict(self) -> dict:
        return {
            "lines": [{"budget": l.syllable_budget, "rhythm": format_rhythm(l.rhythm)} for l in self.lines],
            "melisma_max": self.melisma_max,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: Any) -> "ConstraintProgram":
        try:
            lines = tuple(
                LineConstraint(int(item["budget"]), parse_rhythm(item["rhythm"])) for item in doc["lines"]
            )
            return cls(lines, int(doc.get("melisma_max", 1)))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed constraint program: {exc}") from None

    @classmethod
    def from_json(cls, source: Union[TextIO, str]) -> "ConstraintProgram":
        text = source if isinstance(source, str) else source.read()
        return cls.from_dict(json.loads(text))


def _classify(durations: Sequence[int], mean_total: int, mean_count: int, band: float) -> tuple[RhythmToken, ...]:
    # compare d * count against total * (1 +/- band) so band 0 stays in integers
    upper = mean_total * (1 + band)
    lower = mean_total * (1 - band)
    tokens = []
    for d in durations:
        scaled = d * mean_count
        if scaled > upper:
            tokens.append(RhythmToken.STRESSED)
        elif scaled < lower:
            tokens.append(RhythmToken.UNSTRESSED)
        else:
            tokens.append(RhythmToken.ANY)
    return tuple(tokens)


def compile_constraints(
    melody: Melody,
    mean_scope: str = "per_phrase",
    wildcard_band: float = 0.05,
    melisma_max: int = 1,
) -> ConstraintProgram:
    """One line per phrase: budget = note count, rhythm from duration vs. mean.

    A note longer than ``mean * (1 + band)`` asks for a stressed syllable,
    one shorter than ``mean * (1 - band)`` for an unstressed one; anything
    in between is a wildcard.
    """
    if mean_scope not in ("per_phrase", "global"):
        raise InvalidInputError(f"unknown mean scope {mean_scope!r}")
    if wildcard_band < 0:
        raise InvalidInputError("wildcard band must be non-negative")
    if not melody.phrases:
        raise CompileError("melody has no phrases; segment it first")
    pitched = melody.pitched_notes
    global_total = sum(n.duration for n in pitched)
    lines = []
    for i, phrase in enumerate(melody.phrases):
        notes = melody.phrase_notes(phrase)
        if not notes:
            raise CompileError(f"phrase {i} is empty")
        durations = [n.duration for n in notes]
        if mean_scope == "per_phrase":
            rhythm = _classify(durations, sum(durations), len(durations), wildcard_band)
        else:
            rhythm = _classify(durations, global_total, len(pitched), wildcard_band)
        lines.append(LineConstraint(len(notes), rhythm))
    return ConstraintProgram(tuple(lines), melisma_max)


def rhythm_satisfies(
    stress_pattern: Sequence[StressMark],
    rhythm_slice: Sequence[RhythmToken],
    monosyllable_policy: str = "lenient",
) -> bool:
    if len(stress_pattern) != len(rhythm_slice) or not stress_pattern:
        raise InvalidInputError(
            f"stress pattern length {len(stress_pattern)} vs rhythm slice length {len(rhythm_slice)}"
        )
    if monosyllable_policy == "lenient" and len(stress_pattern) == 1:
        return True
    if monosyllable_policy not in ("lenient", "strict"):
        raise InvalidInputError(f"unknown monosyllable policy {monosyllable_policy!r}")
    return all(tok.matches(mark) for mark, tok in zip(stress_pattern, rhythm_slice))

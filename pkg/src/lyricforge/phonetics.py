"""CMU pronouncing dictionary parsing, stress patterns and syllable counts."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, TextIO, Union

from .errors import InvalidInputError, LyricforgeError

VOWELS = frozenset(
    "AA AE AH AO AW AY EH ER EY IH IY OW OY UH UW".split()
)
CONSONANTS = frozenset(
    "B CH D DH F G HH JH K L M N NG P R S SH T TH V W Y Z ZH".split()
)

_ALTERNATE = re.compile(r"^(.+)\((\d+)\)$")
_PHONE = re.compile(r"^([A-Z]+)([0-9]?)$")


class DictionaryParseError(LyricforgeError, ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class StressMark(enum.Enum):
    STRESSED = "S"
    UNSTRESSED = "U"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Phoneme:
    symbol: str
    stress: Optional[int] = None

    @property
    def is_vowel(self) -> bool:
        return self.symbol in VOWELS

    @classmethod
    def parse(cls, token: str) -> "Phoneme":
        """Split an ARPAbet token such as ``AE1`` into symbol and stress digit."""
        m = _PHONE.match(token)
        if m is None:
            raise ValueError(f"malformed phoneme {token!r}")
        symbol, digit = m.groups()
        if symbol in VOWELS:
            if not digit:
                raise ValueError(f"vowel {token!r} has no stress digit")
            if digit not in "012":
                raise ValueError(f"unknown stress digit in {token!r}")
            return cls(symbol, int(digit))
        if symbol in CONSONANTS:
            if digit:
                raise ValueError(f"consonant {token!r} carries a stress digit")
            return cls(symbol)
        raise ValueError(f"unknown phoneme {token!r}")

    def __str__(self) -> str:
        return self.symbol if self.stress is None else f"{self.symbol}{self.stress}"


@dataclass(frozen=True)
class Pronunciation:
    word: str
    phonemes: tuple[Phoneme, ...]

    @property
    def syllable_count(self) -> int:
        return sum(1 for p in self.phonemes if p.is_vowel)

    @property
    def stress_pattern(self) -> tuple[StressMark, ...]:
        # secondary stress (2) is sung as stressed
        return tuple(
            StressMark.UNSTRESSED if p.stress == 0 else StressMark.STRESSED
            for p in self.phonemes
            if p.is_vowel
        )

    @property
    def pattern_string(self) -> str:
        return "".join(m.value for m in self.stress_pattern)

    def __str__(self) -> str:
        return " ".join(str(p) for p in self.phonemes)


class PronouncingDictionary(Mapping[str, tuple[Pronunciation, ...]]):
    """Read-only mapping from lowercase word to its pronunciations, primary first."""

    def __init__(self, entries: Mapping[str, Iterable[Pronunciation]]):
        self._entries = MappingProxyType(
            {word.lower(): tuple(prons) for word, prons in entries.items()}
        )

    def __getitem__(self, word: str) -> tuple[Pronunciation, ...]:
        return self._entries[word.lower()]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: object) -> bool:
        return isinstance(word, str) and word.lower() in self._entries

    def lookup(self, word: str) -> tuple[Pronunciation, ...]:
        return self._entries.get(word.lower(), ())

    def primary(self, word: str) -> Optional[Pronunciation]:
        prons = self.lookup(word)
        return prons[0] if prons else None

    def syllables(self, word: str) -> int:
        """Primary-pronunciation syllable count, falling back to the spelling heuristic."""
        pron = self.primary(word)
        if pron is not None:
            return pron.syllable_count
        return fallback_syllables(word)


def load_dictionary(source: Union[TextIO, Iterable[str]]) -> PronouncingDictionary:
    """Parse CMUdict-format text.

    Both the classic 0.7b layout (``WORD  PH1 PH2``) and the newer lowercase
    layout with trailing ``#`` comments are accepted. Lines starting with
    ``;;;`` are comments. Alternate pronunciations written ``WORD(2)`` are
    grouped under ``word`` in file order.
    """
    entries: dict[str, list[Pronunciation]] = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if line.startswith(";;;"):
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, *tokens = line.split()
        if not tokens:
            raise DictionaryParseError(lineno, f"entry {head!r} has no phonemes")
        m = _ALTERNATE.match(head)
        word = (m.group(1) if m else head).lower()
        try:
            phonemes = tuple(Phoneme.parse(t) for t in tokens)
        except ValueError as exc:
            raise DictionaryParseError(lineno, str(exc)) from None
        entries.setdefault(word, []).append(Pronunciation(word, phonemes))
    return PronouncingDictionary(entries)


def load_dictionary_file(path: Union[str, Path]) -> PronouncingDictionary:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_dictionary(fh)


def sample_dictionary() -> PronouncingDictionary:
    """The CMUdict subset bundled with the package."""
    ref = resources.files("lyricforge") / "data" / "cmudict-sample.txt"
    with ref.open(encoding="utf-8") as fh:
        return load_dictionary(fh)


def lookup_stress(dictionary: PronouncingDictionary, word: str) -> list[Pronunciation]:
    if not word:
        raise InvalidInputError("word must be non-empty")
    return list(dictionary.lookup(word))


_VOWEL_RUN = re.compile(r"[aeiouy]+")


def fallback_syllables(word: str) -> int:
    """Estimate syllables from spelling for words missing from the dictionary.

    Counts runs of vowel letters (``y`` included). A final ``e`` after a
    consonant is dropped as silent when more than one run was counted and
    the run before that consonant is a single vowel letter (``cake``,
    ``type``); a digraph before it (``maybe``) or a consonant-``le`` ending
    (``table``) keeps the count. Never returns less than 1.
    """
    letters = re.sub(r"[^a-z]", "", word.lower())
    if not letters:
        raise InvalidInputError(f"{word!r} contains no letters")
    runs = list(_VOWEL_RUN.finditer(letters))
    count = len(runs)
    if (
        count > 1
        and letters.endswith("e")
        and len(letters) >= 2
        and letters[-2] not in "aeiouy"
        and runs[-1].start() == len(letters) - 1
        and not (letters.endswith("le") and len(letters) >= 3 and letters[-3] not in "aeiouy")
        and len(runs[-2].group()) == 1
    ):
        count -= 1
    return max(count, 1)

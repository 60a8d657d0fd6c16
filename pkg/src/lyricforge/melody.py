"""Monophonic melodies: the JSON note format and rest-gap phrase segmentation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Optional, TextIO, Union

from .errors import LyricforgeError


class MelodyError(LyricforgeError, ValueError):
    pass


class MelodyFormatError(MelodyError):
    pass


class MonophonyError(MelodyError):
    pass


class PhraseError(MelodyError):
    pass


class EmptyMelodyError(MelodyError):
    pass


@dataclass(frozen=True)
class Note:
    onset: int
    duration: int
    pitch: Optional[int] = None

    def __post_init__(self):
        if self.duration <= 0:
            raise MelodyFormatError(f"note at {self.onset} has non-positive duration {self.duration}")
        if self.onset < 0:
            raise MelodyFormatError(f"negative onset {self.onset}")
        if self.pitch is not None and not 0 <= self.pitch <= 127:
            raise MelodyFormatError(f"pitch {self.pitch} outside 0-127")

    @property
    def end(self) -> int:
        return self.onset + self.duration

    @property
    def is_rest(self) -> bool:
        return self.pitch is None


@dataclass(frozen=True)
class Phrase:
    """Half-open range ``[start, end)`` over the melody's pitched notes."""

    start: int
    end: int

    @property
    def note_count(self) -> int:
        return self.end - self.start

    @property
    def note_indices(self) -> range:
        return range(self.start, self.end)


@dataclass(frozen=True)
class Melody:
    ticks_per_beat: int
    notes: tuple[Note, ...]
    phrases: tuple[Phrase, ...] = field(default=())

    def __post_init__(self):
        if self.ticks_per_beat <= 0:
            raise MelodyFormatError("ticks_per_beat must be positive")
        object.__setattr__(self, "notes", tuple(sorted(self.notes, key=lambda n: n.onset)))
        object.__setattr__(self, "phrases", tuple(self.phrases))
        _check_monophonic(self.pitched_notes)
        if self.phrases:
            _check_phrases(self.phrases, len(self.pitched_notes))

    @property
    def pitched_notes(self) -> tuple[Note, ...]:
        return tuple(n for n in self.notes if not n.is_rest)

    def phrase_notes(self, phrase: Phrase) -> tuple[Note, ...]:
        return self.pitched_notes[phrase.start:phrase.end]


def _check_monophonic(pitched: tuple[Note, ...]) -> None:
    for cur, nxt in zip(pitched, pitched[1:]):
        if nxt.onset < cur.end:
            raise MonophonyError(
                f"pitched notes overlap: onset {cur.onset} (ends {cur.end}) and onset {nxt.onset}"
            )


def _check_phrases(phrases: Iterable[Phrase], pitched_count: int) -> None:
    expected = 0
    for p in phrases:
        if p.start != expected:
            raise PhraseError(f"phrase [{p.start}, {p.end}) does not start at note {expected}")
        if p.end <= p.start:
            raise PhraseError(f"phrase [{p.start}, {p.end}) is empty")
        if p.end > pitched_count:
            raise PhraseError(f"phrase [{p.start}, {p.end}) exceeds {pitched_count} pitched notes")
        expected = p.end
    if expected != pitched_count:
        raise PhraseError(f"phrases cover {expected} of {pitched_count} pitched notes")


def _require_int(obj: Any, name: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise MelodyFormatError(f"{name} must be an integer, got {obj!r}")
    return obj


def melody_from_dict(doc: Any) -> Melody:
    if not isinstance(doc, dict):
        raise MelodyFormatError("melody document must be a JSON object")
    try:
        tpb = _require_int(doc["ticks_per_beat"], "ticks_per_beat")
        raw_notes = doc["notes"]
    except KeyError as exc:
        raise MelodyFormatError(f"missing key {exc.args[0]!r}") from None
    if not isinstance(raw_notes, list):
        raise MelodyFormatError("notes must be an array")
    notes = []
    for i, raw in enumerate(raw_notes):
        if not isinstance(raw, dict):
            raise MelodyFormatError(f"note {i} must be an object")
        try:
            onset = _require_int(raw["onset"], f"notes[{i}].onset")
            duration = _require_int(raw["duration"], f"notes[{i}].duration")
        except KeyError as exc:
            raise MelodyFormatError(f"note {i} missing key {exc.args[0]!r}") from None
        pitch = raw.get("pitch")
        if pitch is not None:
            pitch = _require_int(pitch, f"notes[{i}].pitch")
        notes.append(Note(onset, duration, pitch))
    phrases = []
    for i, rng in enumerate(doc.get("phrases") or []):
        if not (isinstance(rng, list) and len(rng) == 2):
            raise PhraseError(f"phrase {i} must be a [start, end] pair")
        phrases.append(Phrase(_require_int(rng[0], "phrase start"), _require_int(rng[1], "phrase end")))
    return Melody(tpb, tuple(notes), tuple(phrases))


def parse_melody_json(source: Union[TextIO, str]) -> Melody:
    text = source if isinstance(source, str) else source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MelodyFormatError(f"invalid JSON: {exc}") from None
    return melody_from_dict(doc)


def melody_to_dict(melody: Melody) -> dict:
    doc: dict[str, Any] = {
        "ticks_per_beat": melody.ticks_per_beat,
        "notes": [{"onset": n.onset, "duration": n.duration, "pitch": n.pitch} for n in melody.notes],
    }
    if melody.phrases:
        doc["phrases"] = [[p.start, p.end] for p in melody.phrases]
    return doc


def dump_melody_json(melody: Melody) -> str:
    """Canonical serialization; parsing the result and dumping again is byte-identical."""
    return json.dumps(melody_to_dict(melody), indent=2) + "\n"


def segment_phrases(melody: Melody, gap_threshold_ticks: Optional[int] = None) -> Melody:
    """Split pitched notes into phrases at silences of at least the threshold.

    Explicit phrases already on the melody are kept as they are. The
    threshold defaults to one beat.
    """
    pitched = melody.pitched_notes
    if not pitched:
        raise EmptyMelodyError("melody has no pitched notes")
    if melody.phrases:
        return melody
    threshold = melody.ticks_per_beat if gap_threshold_ticks is None else gap_threshold_ticks
    if threshold <= 0:
        raise MelodyError("gap threshold must be positive")
    phrases = []
    start = 0
    for i, (cur, nxt) in enumerate(zip(pitched, pitched[1:]), start=1):
        if nxt.onset - cur.end >= threshold:
            phrases.append(Phrase(start, i))
            start = i
    phrases.append(Phrase(start, len(pitched)))
    return replace(melody, phrases=tuple(phrases))

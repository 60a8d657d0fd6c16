"""Keyword extraction and the line-by-line keyword plan.

Keyword scores follow the single-word YAKE features (Campos et al., 2020).
For a candidate term ``t`` (any non-stopword token, lowercased):

* casing      ``max(TF_upper, TF_acronym) / (1 + ln TF)`` where ``TF_upper``
  counts capitalised occurrences that do not open a sentence and
  ``TF_acronym`` all-caps occurrences longer than one letter.
* position    ``ln(ln(3 + median(S_t)))`` over the distinct 0-based indices
  ``S_t`` of sentences containing ``t``.
* frequency   ``TF / (mean(TF) + std(TF))`` with mean and population
  standard deviation over all candidate terms.
* relatedness ``1 + (DL/NL + DR/NR) * TF / max_TF``: ``DL``/``NL`` are the
  distinct and total tokens immediately left of ``t`` inside its sentences
  (stopwords included, ``0/0`` taken as 0), likewise on the right; ``max_TF``
  is the largest frequency of any token.
* spread      ``SF / n_sentences`` with ``SF`` the sentences containing ``t``.

``score = (relatedness * position) / (casing + frequency / relatedness +
spread / relatedness)``; lower is better.
"""

from __future__ import annotations

import json
import math
import re
import statistics
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

from .constraint import ConstraintProgram
from .errors import InvalidInputError, LyricforgeError
from .phonetics import PronouncingDictionary


class NoCandidatesError(LyricforgeError, ValueError):
    pass


@lru_cache(maxsize=None)
def _wordlist(name: str) -> frozenset:
    text = (resources.files("lyricforge") / "data" / name).read_text(encoding="utf-8")
    return frozenset(
        line.strip().lower() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def stopwords() -> frozenset:
    return _wordlist("stopwords.txt")


_SENTENCE_SPLIT = re.compile(r"[.!?;:\n]+")
_TOKEN = re.compile(r"[A-Za-z][A-Za-z']*")


def split_sentences(text: str) -> list[list[str]]:
    sentences = (_TOKEN.findall(chunk) for chunk in _SENTENCE_SPLIT.split(text))
    return [s for s in sentences if s]


@dataclass
class _TermStats:
    tf: int = 0
    upper: int = 0
    acronym: int = 0
    sentences: set = field(default_factory=set)
    left: Counter = field(default_factory=Counter)
    right: Counter = field(default_factory=Counter)


def keyword_features(text: str) -> dict[str, dict[str, float]]:
    """The five feature values and combined score for every candidate term."""
    sentences = split_sentences(text)
    stop = stopwords()
    stats: dict[str, _TermStats] = defaultdict(_TermStats)
    for si, sentence in enumerate(sentences):
        lowered = [tok.lower() for tok in sentence]
        for pos, (raw, term) in enumerate(zip(sentence, lowered)):
            st = stats[term]
            st.tf += 1
            st.sentences.add(si)
            if len(raw) > 1 and raw.isupper():
                st.acronym += 1
            elif pos > 0 and raw[0].isupper():
                st.upper += 1
            if pos > 0:
                st.left[lowered[pos - 1]] += 1
            if pos + 1 < len(lowered):
                st.right[lowered[pos + 1]] += 1

    candidates = {t: st for t, st in stats.items() if t not in stop}
    if not candidates:
        raise NoCandidatesError("text has no non-stopword tokens")
    tfs = [st.tf for st in candidates.values()]
    tf_norm = statistics.fmean(tfs) + statistics.pstdev(tfs)
    max_tf = max(st.tf for st in stats.values())
    n_sent = len(sentences)

    features = {}
    for term, st in candidates.items():
        casing = max(st.upper, st.acronym) / (1 + math.log(st.tf))
        position = math.log(math.log(3 + statistics.median(sorted(st.sentences))))
        frequency = st.tf / tf_norm
        left = len(st.left) / sum(st.left.values()) if st.left else 0.0
        right = len(st.right) / sum(st.right.values()) if st.right else 0.0
        relatedness = 1 + (left + right) * st.tf / max_tf
        spread = len(st.sentences) / n_sent
        score = (relatedness * position) / (casing + frequency / relatedness + spread / relatedness)
        features[term] = {
            "casing": casing,
            "position": position,
            "frequency": frequency,
            "relatedness": relatedness,
            "spread": spread,
            "score": score,
        }
    return features


def extract_keywords(text: str, count: int = 3) -> list[tuple[str, float]]:
    if not text or not text.strip():
        raise InvalidInputError("text must be non-empty")
    if count < 1:
        raise InvalidInputError("count must be at least 1")
    features = keyword_features(text)
    ranked = sorted(((t, f["score"]) for t, f in features.items()), key=lambda ts: (ts[1], ts[0]))
    return ranked[:count]


@dataclass(frozen=True)
class GenerationRequest:
    title: str
    salient_words: tuple[str, ...]
    genre: str = ""
    seed: int = 0

    def __post_init__(self):
        words = []
        for w in self.salient_words:
            w = w.strip().lower()
            if w and w not in words:
                words.append(w)
        if not words:
            raise InvalidInputError("at least one salient word is required")
        if len(words) > 10:
            raise InvalidInputError("at most 10 salient words are allowed")
        if self.seed < 0:
            raise InvalidInputError("seed must be non-negative")
        object.__setattr__(self, "salient_words", tuple(words))

    def keyword_pool(self) -> list[str]:
        """Salient words first, then title words that are not stopwords."""
        pool = list(self.salient_words)
        for tok in _TOKEN.findall(self.title):
            tok = tok.lower()
            if tok not in stopwords() and tok not in pool:
                pool.append(tok)
        return pool


@dataclass(frozen=True)
class Plan:
    line_keywords: tuple[tuple[str, ...], ...]

    def to_dict(self) -> dict:
        return {"lines": [list(kws) for kws in self.line_keywords]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict()) + "\n"

    @classmethod
    def from_dict(cls, doc) -> "Plan":
        return cls(tuple(tuple(str(w) for w in kws) for kws in doc["lines"]))


def make_plan(
    request: GenerationRequest,
    program: ConstraintProgram,
    dictionary: PronouncingDictionary,
    keywords_per_line: int = 1,
) -> Plan:
    """Deal keywords to lines in rotation.

    A keyword too long for a line stays at the head of the rotation and is
    offered to the following lines until one has room for it.
    """
    if not program.lines:
        raise InvalidInputError("program has no lines")
    if keywords_per_line < 0:
        raise InvalidInputError("keywords_per_line must be non-negative")
    rotation = deque(request.keyword_pool())
    planned = []
    for line in program.lines:
        room = line.syllable_budget
        chosen: list[str] = []
        for kw in list(rotation):
            if len(chosen) >= keywords_per_line:
                break
            syl = dictionary.syllables(kw)
            if syl <= room:
                chosen.append(kw)
                room -= syl
                rotation.remove(kw)
                rotation.append(kw)
        planned.append(tuple(chosen))
    return Plan(tuple(planned))

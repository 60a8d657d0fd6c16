"""Language-model contract used by the decoder and a word-level n-gram model.

Text is framed song by song: every line starts with ``BOS`` (context only,
never predicted) and ends with a predicted ``EOL``; the end of a song
predicts ``EOS``. History carries across lines within a song.

Model file layout (all integers big-endian)::

    b"LYFNG"  5 bytes   magic
    b"1"      1 byte    format version
    length    8 bytes   payload length in bytes
    crc32     4 bytes   CRC-32 of the payload
    payload   zlib-compressed UTF-8 JSON:
              {"order": int, "k": float, "words": [str, ...],
               "ngrams": [[[context...], token, count], ...] per order 1..N}
"""

from __future__ import annotations

import abc
import json
import math
import struct
import zlib
from collections import Counter, defaultdict
from functools import lru_cache
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping, Optional, Sequence, Union

from .errors import InvalidInputError, LyricforgeError

BOS = "<s>"
EOL = "</l>"
EOS = "</s>"
RESERVED = (BOS, EOL, EOS)

MAGIC = b"LYFNG"
VERSION = b"1"
BACKOFF = 0.4


class ModelFormatError(LyricforgeError, ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class LanguageModel(abc.ABC):
    """Anything that predicts the next token from a history of tokens."""

    vocabulary: frozenset

    @abc.abstractmethod
    def next_distribution(self, context: Sequence[str]) -> dict[str, float]:
        """Probabilities for every predictable token, summing to 1."""

    def prob(self, token: str, context: Sequence[str]) -> float:
        return self.next_distribution(context).get(token, 0.0)

    def ranked(self, context: Sequence[str]) -> Sequence[tuple[str, float]]:
        """Tokens with non-zero probability, most likely first (ties by token)."""
        dist = self.next_distribution(context)
        return sorted(((w, p) for w, p in dist.items() if p > 0), key=lambda wp: (-wp[1], wp[0]))

    def sequence_logprob(self, lines: Iterable[Sequence[str]]) -> tuple[float, int]:
        """Natural-log probability of the lines as one song, and the token count scored."""
        total, n = 0.0, 0
        for history, token in scored_events(lines):
            p = self.prob(token, history)
            total += math.log(p) if p > 0 else -math.inf
            n += 1
        return total, n


def scored_events(lines: Iterable[Sequence[str]]):
    """Yield ``(history, token)`` for each word and EOL of consecutive lines."""
    history: list[str] = []
    for line in lines:
        history.append(BOS)
        for token in list(line) + [EOL]:
            yield tuple(history), token
            history.append(token)


def song_events(song: Sequence[Sequence[str]]):
    yield from scored_events(song)
    history: list[str] = []
    for line in song:
        history += [BOS, *line, EOL]
    yield tuple(history), EOS


class NGramModel(LanguageModel):
    """Add-k smoothed n-gram model that backs off to the longest seen context.

    At k = 0 a seen context gives zero probability to tokens never observed
    after it; only a completely unseen context falls back a level.
    """

    def __init__(self, order: int, k: float, words: Iterable[str], counts: Sequence[Mapping[tuple, Mapping[str, int]]]):
        if order < 1:
            raise InvalidInputError("order must be at least 1")
        if k < 0:
            raise InvalidInputError("k must be non-negative")
        self.order = order
        self.k = float(k)
        self.words = frozenset(words) - set(RESERVED)
        self.vocabulary = self.words | set(RESERVED)
        self.predictable = tuple(sorted(self.words)) + (EOL, EOS)
        self.counts = [
            {ctx: dict(c) for ctx, c in level.items()} for level in counts
        ]
        self.totals = [{ctx: sum(c.values()) for ctx, c in level.items()} for level in self.counts]
        self._dist = lru_cache(maxsize=65536)(self._distribution)
        self._rank = lru_cache(maxsize=65536)(self._ranked)

    def _resolve(self, context: Sequence[str]) -> tuple[int, tuple]:
        """Longest suffix of the context (up to order-1 tokens) seen in training."""
        for n in range(min(self.order, len(context) + 1), 1, -1):
            ctx = tuple(context[len(context) - (n - 1):])
            if ctx in self.counts[n - 1]:
                return n, ctx
        return 1, ()

    def _distribution(self, n: int, ctx: tuple) -> dict[str, float]:
        seen = self.counts[n - 1][ctx]
        denom = self.totals[n - 1][ctx] + self.k * len(self.predictable)
        # stupid-backoff weight for the levels skipped; cancels on normalization
        weight = BACKOFF ** (min(self.order, len(ctx) + 1) - n)
        raw = {w: weight * (seen.get(w, 0) + self.k) / denom for w in self.predictable}
        z = sum(raw.values())
        return {w: p / z for w, p in raw.items()}

    def _ranked(self, n: int, ctx: tuple):
        dist = self._distribution(n, ctx)
        return tuple(sorted(((w, p) for w, p in dist.items() if p > 0), key=lambda wp: (-wp[1], wp[0])))

    def next_distribution(self, context: Sequence[str]) -> dict[str, float]:
        return dict(self._dist(*self._resolve(context)))

    def ranked(self, context: Sequence[str]):
        return self._rank(*self._resolve(context))

    def prob(self, token: str, context: Sequence[str]) -> float:
        # direct count arithmetic, independent of the full-distribution path
        if token not in self.predictable:
            return 0.0
        n, ctx = self._resolve(context)
        seen = self.counts[n - 1][ctx]
        return (seen.get(token, 0) + self.k) / (self.totals[n - 1][ctx] + self.k * len(self.predictable))


def split_songs(lines: Iterable[str]) -> list[list[list[str]]]:
    """Group raw text lines into songs of tokenized lines; blank lines separate songs."""
    songs: list[list[list[str]]] = []
    current: list[list[str]] = []
    for raw in lines:
        tokens = raw.lower().split()
        if tokens:
            current.append(tokens)
        elif current:
            songs.append(current)
            current = []
    if current:
        songs.append(current)
    return songs


def train_ngram(corpus: Iterable[str], order: int = 3, k: float = 0.01) -> NGramModel:
    if order < 1:
        raise InvalidInputError("order must be at least 1")
    if k < 0:
        raise InvalidInputError("k must be non-negative")
    songs = split_songs(corpus)
    if not songs:
        raise InvalidInputError("corpus is empty")
    counts: list[dict[tuple, Counter]] = [defaultdict(Counter) for _ in range(order)]
    words = set()
    for song in songs:
        for line in song:
            words.update(line)
        for history, token in song_events(song):
            for n in range(1, order + 1):
                if len(history) < n - 1:
                    break
                ctx = tuple(history[len(history) - (n - 1):]) if n > 1 else ()
                counts[n - 1][ctx][token] += 1
    return NGramModel(order, k, words, counts)


def load_corpus(path: Union[str, Path]) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def perplexity(model: LanguageModel, lines: Sequence[Sequence[str]]) -> float:
    """exp of the mean negative log-probability over words and EOLs.

    Returns ``math.inf`` when some token has probability zero.
    """
    if not lines:
        raise InvalidInputError("no lines to score")
    total, n = 0.0, 0
    for history, token in scored_events(lines):
        p = model.next_distribution(history).get(token, 0.0)
        if p <= 0:
            return math.inf
        total += math.log(p)
        n += 1
    return math.exp(-total / n)


def save_model(model: NGramModel, sink: BinaryIO) -> None:
    ngrams = [
        [[list(ctx), tok, cnt] for ctx, row in sorted(level.items()) for tok, cnt in sorted(row.items())]
        for level in model.counts
    ]
    doc = {"order": model.order, "k": model.k, "words": sorted(model.words), "ngrams": ngrams}
    payload = zlib.compress(json.dumps(doc, separators=(",", ":")).encode("utf-8"), 9)
    sink.write(MAGIC + VERSION + struct.pack(">QI", len(payload), zlib.crc32(payload)) + payload)


def load_model(source: BinaryIO) -> NGramModel:
    head = source.read(18)
    if head[:5] != MAGIC:
        raise ModelFormatError("not a lyricforge n-gram model (bad magic)")
    if len(head) < 6:
        raise ModelFormatError("truncated model header")
    if head[5:6] != VERSION:
        raise ModelVersionError(f"unsupported model version {head[5:6]!r}")
    if len(head) < 18:
        raise ModelFormatError("truncated model header")
    length, crc = struct.unpack(">QI", head[6:18])
    payload = source.read(length)
    if len(payload) != length or zlib.crc32(payload) != crc:
        raise ModelFormatError("truncated or corrupt model payload")
    try:
        doc = json.loads(zlib.decompress(payload).decode("utf-8"))
        counts = [
            {tuple(ctx): {} for ctx, _, _ in level} for level in doc["ngrams"]
        ]
        for n, level in enumerate(doc["ngrams"]):
            for ctx, tok, cnt in level:
                counts[n][tuple(ctx)][tok] = cnt
        return NGramModel(doc["order"], doc["k"], doc["words"], counts)
    except (KeyError, TypeError, ValueError, zlib.error) as exc:
        raise ModelFormatError(f"corrupt model payload: {exc}") from None


def save_model_file(model: NGramModel, path: Union[str, Path]) -> None:
    with open(path, "wb") as fh:
        save_model(model, fh)


def load_model_file(path: Union[str, Path]) -> NGramModel:
    with open(path, "rb") as fh:
        return load_model(fh)


def select_model_path(path: Union[str, Path], genre: Optional[str] = None) -> Path:
    """A directory of per-genre models resolves to ``<genre>.lyfng``, else ``default.lyfng``."""
    path = Path(path)
    if not path.is_dir():
        return path
    if genre:
        candidate = path / f"{genre.lower()}.lyfng"
        if candidate.exists():
            return candidate
    return path / "default.lyfng"

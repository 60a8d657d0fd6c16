import io
import json
from importlib import resources

import pytest

from lyricforge.lm import LanguageModel, train_ngram
from lyricforge.melody import parse_melody_json
from lyricforge.phonetics import load_dictionary, sample_dictionary

DATA = resources.files("lyricforge") / "data"

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] {number}. {name}: {detail}")


@pytest.fixture(scope="session")
def cmudict():
    return sample_dictionary()


@pytest.fixture(scope="session")
def corpus_lines():
    return (DATA / "corpus.txt").read_text(encoding="utf-8").splitlines()


@pytest.fixture(scope="session")
def corpus_model(corpus_lines):
    return train_ngram(corpus_lines, order=3, k=0.01)


def fixture_melodies():
    folder = DATA / "melodies"
    return [
        parse_melody_json(folder.joinpath(f"melody_{i:02d}.json").read_text(encoding="utf-8"))
        for i in range(20)
    ]


def toy_dictionary(entries):
    """Build a dictionary from {"word": "PH1 PH2", ...}; list values give alternates."""
    lines = []
    for word, prons in entries.items():
        prons = [prons] if isinstance(prons, str) else prons
        for i, pron in enumerate(prons):
            head = word.upper() if i == 0 else f"{word.upper()}({i + 1})"
            lines.append(f"{head}  {pron}")
    return load_dictionary(io.StringIO("\n".join(lines)))


def melody_doc(notes, tpb=480, phrases=None):
    doc = {"ticks_per_beat": tpb, "notes": [dict(onset=o, duration=d, pitch=p) for o, d, p in notes]}
    if phrases is not None:
        doc["phrases"] = phrases
    return json.dumps(doc)


class TableLM(LanguageModel):
    """The same distribution after every context."""

    def __init__(self, dist):
        self.dist = dict(dist)
        self.vocabulary = frozenset(dist)

    def next_distribution(self, context):
        return dict(self.dist)

import io
import re

import pytest
from hypothesis import given, strategies as st

from conftest import DATA
from lyricforge.errors import InvalidInputError
from lyricforge.phonetics import (
    CONSONANTS,
    VOWELS,
    DictionaryParseError,
    Phoneme,
    Pronunciation,
    StressMark,
    fallback_syllables,
    load_dictionary,
    lookup_stress,
)

S, U = StressMark.STRESSED, StressMark.UNSTRESSED


def parse(text):
    return load_dictionary(io.StringIO(text))


def test_spanish_entry():
    d = parse("SPANISH  S P AE1 N IH0 SH\n")
    (pron,) = lookup_stress(d, "spanish")
    assert pron.syllable_count == 2
    assert pron.stress_pattern == (S, U)
    assert [str(p) for p in pron.phonemes] == ["S", "P", "AE1", "N", "IH0", "SH"]


def test_comment_lines_are_skipped():
    assert len(parse(";;; comment\n")) == 0


def test_alternates_grouped_under_headword():
    d = parse("A  AH0\nA(2)  EY1\n")
    assert list(d) == ["a"]
    prons = d["a"]
    assert len(prons) == 2
    assert prons[0].stress_pattern == (U,)
    assert prons[1].stress_pattern == (S,)


def test_secondary_stress_counts_as_stressed():
    (pron,) = parse("UNDERSTAND  AH2 N D ER0 S T AE1 N D\n")["understand"]
    assert pron.stress_pattern == (S, U, S)


def test_lookup_is_case_insensitive(cmudict):
    assert lookup_stress(cmudict, "Spanish")[0].stress_pattern == (S, U)
    assert lookup_stress(cmudict, "SPANISH") == lookup_stress(cmudict, "spanish")


def test_absent_word_gives_empty_list(cmudict):
    assert lookup_stress(cmudict, "qqqq") == []


def test_memories(cmudict):
    pron = lookup_stress(cmudict, "memories")[0]
    assert pron.syllable_count == 3
    assert pron.stress_pattern == (S, U, U)


def test_apostrophes_are_kept():
    d = parse("DON'T  D OW1 N T\n")
    assert "don't" in d


def test_empty_word_is_rejected(cmudict):
    with pytest.raises(InvalidInputError):
        lookup_stress(cmudict, "")


@pytest.mark.parametrize(
    "line",
    [
        "WORD",  # no phonemes
        "WORD  W ER3 D",  # stress digit outside 0-2
        "WORD  W ER D",  # vowel without stress
        "WORD  W1 ER1 D",  # consonant with stress
        "WORD  W QX1 D",  # not ARPAbet
    ],
)
def test_malformed_entries_report_line_number(line):
    with pytest.raises(DictionaryParseError) as info:
        parse(";;; header\nOK  OW1 K EY1\n" + line + "\n")
    assert info.value.lineno == 3
    assert "line 3" in str(info.value)


def test_crlf_and_new_cmudict_layout():
    text = "tree T R IY1\r\nabkhazian AE0 B K AA1 Z IY0 AH0 N # place\r\n\r\n"
    d = parse(text)
    assert d["tree"][0].syllable_count == 1
    assert d["abkhazian"][0].stress_pattern == (U, S, U, U)


def test_dictionary_is_read_only(cmudict):
    with pytest.raises(TypeError):
        cmudict["new"] = ()


def test_syllable_count_matches_raw_digits_for_whole_bundled_file():
    raw = (DATA / "cmudict-sample.txt").read_text(encoding="utf-8").splitlines()
    d = load_dictionary(raw)
    seen = {}
    for line in raw:
        if line.startswith(";;;") or not line.strip():
            continue
        head, phones = line.split("  ", 1)
        word = re.sub(r"\(\d+\)$", "", head).lower()
        index = seen.get(word, 0)
        seen[word] = index + 1
        digits = re.findall(r"[012]", phones)
        pron = d[word][index]
        assert pron.syllable_count == len(digits)
        assert pron.pattern_string == "".join("U" if x == "0" else "S" for x in digits)
    assert sum(seen.values()) == sum(len(v) for v in d.values())


def test_lookup_is_deterministic(cmudict):
    assert lookup_stress(cmudict, "every") == lookup_stress(cmudict, "every")


phoneme_tokens = st.one_of(
    st.sampled_from(sorted(CONSONANTS)),
    st.builds(lambda v, d: f"{v}{d}", st.sampled_from(sorted(VOWELS)), st.sampled_from("012")),
)


@given(st.lists(phoneme_tokens, min_size=1, max_size=12))
def test_pronunciation_invariants(tokens):
    pron = Pronunciation("w", tuple(Phoneme.parse(t) for t in tokens))
    vowels = [t for t in tokens if t[-1].isdigit()]
    assert pron.syllable_count == len(vowels) == len(pron.stress_pattern)
    for tok, mark in zip(vowels, pron.stress_pattern):
        assert (mark is S) == (tok[-1] in "12")
    for ph in pron.phonemes:
        assert (ph.stress is not None) == ph.is_vowel


@pytest.mark.parametrize(
    "word, expected",
    [("zzz", 1), ("maybe", 2), ("cake", 1), ("table", 2), ("type", 1), ("while", 1), ("banana", 3), ("the", 1)],
)
def test_fallback_syllables(word, expected):
    assert fallback_syllables(word) == expected


def test_fallback_rejects_words_without_letters():
    with pytest.raises(InvalidInputError):
        fallback_syllables("1234")


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz'-", min_size=1).filter(lambda w: re.search("[a-z]", w)))
def test_fallback_is_at_least_one(word):
    assert fallback_syllables(word) >= 1


def test_dictionary_syllables_prefers_entry_then_fallback(cmudict):
    assert cmudict.syllables("memories") == 3
    assert cmudict.syllables("zzzcake") == fallback_syllables("zzzcake")

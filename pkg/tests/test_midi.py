import io

import pytest
from hypothesis import given, strategies as st

from lyricforge.melody import (
    Melody,
    MonophonyError,
    Note,
    dump_melody_json,
    parse_melody_json,
)
from lyricforge.midi import (
    DanglingNoteError,
    MidiFormatError,
    UnsupportedMidiError,
    parse_midi,
    write_midi,
)


def header(fmt=0, ntrks=1, division=480):
    return b"MThd" + (6).to_bytes(4, "big") + fmt.to_bytes(2, "big") + ntrks.to_bytes(2, "big") + division.to_bytes(2, "big")


def track(body):
    return b"MTrk" + len(body).to_bytes(4, "big") + body


END = bytes.fromhex("00 FF 2F 00")
HANDCRAFTED = bytes.fromhex(
    "4D546864 00000006 0000 0001 01E0"
    "4D54726B 0000000D"
    "00 90 3C 40 83 60 80 3C 40 00 FF 2F 00"
)


def test_handcrafted_bytes():
    assert HANDCRAFTED == header() + track(bytes.fromhex("00 90 3C 40 83 60 80 3C 40") + END)
    m = parse_midi(HANDCRAFTED)
    assert m.ticks_per_beat == 480
    assert m.notes == (Note(0, 480, 60),)
    assert m.phrases == ()


def test_velocity_zero_note_on_is_note_off():
    data = header() + track(bytes.fromhex("00 90 3C 40 83 60 90 3C 00") + END)
    assert parse_midi(data).notes == (Note(0, 480, 60),)


def test_running_status():
    # second and third events reuse the 0x90 status
    body = bytes.fromhex("00 90 3C 40 83 60 3C 00 00 3E 40 83 60 3E 00")
    m = parse_midi(header() + track(body + END))
    assert m.notes == (Note(0, 480, 60), Note(480, 480, 62))


def test_meta_and_sysex_events_are_skipped():
    tempo = bytes.fromhex("00 FF 51 03 07 A1 20")
    name = b"\x00\xff\x03\x04lead"
    sysex = bytes.fromhex("00 F0 03 7E 7F F7")
    body = tempo + name + sysex + bytes.fromhex("00 90 3C 40 83 60 80 3C 40")
    assert parse_midi(io.BytesIO(header() + track(body + END))).notes == (Note(0, 480, 60),)


def test_bad_magic():
    with pytest.raises(MidiFormatError):
        parse_midi(b"RIFF" + HANDCRAFTED[4:])


def test_missing_track():
    with pytest.raises(MidiFormatError):
        parse_midi(header())


def test_smpte_division():
    with pytest.raises(UnsupportedMidiError):
        parse_midi(header(division=0xE728) + track(END))


def test_format_two_is_unsupported():
    with pytest.raises(UnsupportedMidiError):
        parse_midi(header(fmt=2) + track(END))


def test_dangling_note():
    with pytest.raises(DanglingNoteError):
        parse_midi(header() + track(bytes.fromhex("00 90 3C 40") + END))


def test_polyphony():
    body = bytes.fromhex("00 90 3C 40 00 90 40 40 83 60 80 3C 40 00 80 40 40")
    with pytest.raises(MonophonyError):
        parse_midi(header() + track(body + END))


def test_truncated_track():
    with pytest.raises(MidiFormatError):
        parse_midi(header() + b"MTrk" + (20).to_bytes(4, "big") + b"\x00\x90")


def test_track_select_in_format_one():
    conductor = track(bytes.fromhex("00 FF 51 03 07 A1 20") + END)
    lead = track(bytes.fromhex("00 90 40 40 81 70 80 40 40") + END)
    data = header(fmt=1, ntrks=2) + conductor + lead
    assert parse_midi(data, track_select=0).notes == ()
    assert parse_midi(data, track_select=1).notes == (Note(0, 240, 64),)


melodies = st.lists(
    st.tuples(st.integers(0, 1000), st.integers(1, 2000), st.integers(0, 127)), min_size=1, max_size=20
)


@given(melodies, st.sampled_from([96, 480, 960]))
def test_midi_to_json_round_trip(parts, tpb):
    notes, t = [], 0
    for gap, dur, pitch in parts:
        t += gap
        notes.append(Note(t, dur, pitch))
        t += dur
    m = parse_midi(write_midi(notes, tpb))
    assert m == Melody(tpb, tuple(notes))
    assert parse_melody_json(dump_melody_json(m)) == m

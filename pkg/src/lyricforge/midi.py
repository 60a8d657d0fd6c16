"""Standard MIDI File reading for monophonic melody tracks.

Only what melody extraction needs is decoded: chunk framing, variable-length
quantities, running status, and note-on/note-off pairing. Tempo, meta and
sysex events are skipped; timing stays in ticks.
"""

from __future__ import annotations

import struct
from typing import BinaryIO, Iterable, Union

from .melody import Melody, MelodyError, MelodyFormatError, MonophonyError, Note


class MidiFormatError(MelodyFormatError):
    pass


class UnsupportedMidiError(MelodyError):
    pass


class DanglingNoteError(MelodyError):
    pass


# data bytes per channel message, keyed by status high nibble
_DATA_LEN = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


def _read_varlen(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    for _ in range(4):
        if pos >= len(data):
            raise MidiFormatError("truncated variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MidiFormatError("variable-length quantity longer than 4 bytes")


def _chunks(data: bytes):
    pos = 0
    while pos < len(data):
        if pos + 8 > len(data):
            raise MidiFormatError("truncated chunk header")
        kind = data[pos:pos + 4]
        (length,) = struct.unpack(">I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + length]
        if len(body) != length:
            raise MidiFormatError(f"truncated {kind!r} chunk")
        yield kind, body
        pos += 8 + length


def _track_events(track: bytes):
    """Yield ``(absolute_tick, status, data)`` for channel messages in a track."""
    pos = 0
    tick = 0
    running = None
    while pos < len(track):
        delta, pos = _read_varlen(track, pos)
        tick += delta
        if pos >= len(track):
            raise MidiFormatError("event missing after delta time")
        status = track[pos]
        if status == 0xFF:
            if pos + 2 > len(track):
                raise MidiFormatError("truncated meta event")
            meta_type = track[pos + 1]
            length, pos = _read_varlen(track, pos + 2)
            pos += length
            running = None
            if meta_type == 0x2F:
                return
            continue
        if status in (0xF0, 0xF7):
            length, pos = _read_varlen(track, pos + 1)
            pos += length
            running = None
            continue
        if status & 0x80:
            running = status
            pos += 1
        elif running is None:
            raise MidiFormatError("data byte without running status")
        need = _DATA_LEN.get(running & 0xF0)
        if need is None:
            raise MidiFormatError(f"unexpected status byte 0x{running:02X}")
        payload = track[pos:pos + need]
        if len(payload) != need:
            raise MidiFormatError("truncated channel message")
        pos += need
        yield tick, running, payload
    raise MidiFormatError("track ends without end-of-track event")


def parse_midi(source: Union[BinaryIO, bytes], track_select: int = 0) -> Melody:
    """Extract the notes of one track as a phrase-less Melody.

    ``track_select`` indexes the file's MTrk chunks. A note-on with velocity
    0 counts as note-off. Notes whose on and off share a tick are dropped.
    """
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    if data[:4] != b"MThd":
        raise MidiFormatError("missing MThd header")
    chunks = list(_chunks(bytes(data)))
    header = chunks[0][1]
    if len(header) < 6:
        raise MidiFormatError("MThd chunk shorter than 6 bytes")
    fmt, ntrks, division = struct.unpack(">HHH", header[:6])
    if fmt not in (0, 1):
        raise UnsupportedMidiError(f"SMF format {fmt} is not supported")
    if division & 0x8000:
        raise UnsupportedMidiError("SMPTE time division is not supported")
    if division == 0:
        raise MidiFormatError("division of zero ticks per beat")
    tracks = [body for kind, body in chunks[1:] if kind == b"MTrk"]
    if not tracks:
        raise MidiFormatError("no MTrk chunk")
    if not 0 <= track_select < len(tracks):
        raise MelodyError(f"track {track_select} not present ({len(tracks)} tracks)")

    sounding: dict[int, int] = {}
    notes = []
    for tick, status, payload in _track_events(tracks[track_select]):
        kind = status & 0xF0
        if kind not in (0x80, 0x90):
            continue
        key, velocity = payload[0], payload[1]
        if kind == 0x90 and velocity > 0:
            if key in sounding:
                raise MonophonyError(f"key {key} re-struck at tick {tick} while sounding")
            sounding[key] = tick
        elif key in sounding:
            onset = sounding.pop(key)
            if tick > onset:
                notes.append(Note(onset, tick - onset, key))
    if sounding:
        key, onset = next(iter(sounding.items()))
        raise DanglingNoteError(f"note {key} started at tick {onset} is never released")
    return Melody(division, tuple(notes))


def _varlen(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def write_midi(notes: Iterable[Note], ticks_per_beat: int = 480, channel: int = 0, velocity: int = 64) -> bytes:
    """Encode pitched notes as a format-0 SMF with explicit note-off events."""
    events = []
    for n in notes:
        if n.is_rest:
            continue
        events.append((n.onset, 1, bytes([0x90 | channel, n.pitch, velocity])))
        events.append((n.end, 0, bytes([0x80 | channel, n.pitch, 0])))
    events.sort(key=lambda e: (e[0], e[1]))
    body = bytearray()
    now = 0
    for tick, _, msg in events:
        body += _varlen(tick - now) + msg
        now = tick
    body += b"\x00\xff\x2f\x00"
    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, ticks_per_beat)
    return header + b"MTrk" + struct.pack(">I", len(body)) + bytes(body)

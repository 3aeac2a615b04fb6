"""Pitch mapping and file output: MIDI, interval tables, histograms."""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass

from .composer import Interval, Melody
from .errors import MidiRangeError, TableFormatError
from .qsim import CountsTable, all_labels

# Semitone offsets of C D E F G A B above C.
WHITE_OFFSETS = (0, 2, 4, 5, 7, 9, 11)
MIDDLE_C = 60
DIVISION = 480
VELOCITY = 80


@dataclass(frozen=True)
class MidiNote:
    midi_number: int
    start_tick: int
    duration_tick: int
    velocity: int = VELOCITY

    def __post_init__(self):
        if not 0 <= self.midi_number <= 127:
            raise MidiRangeError(f"MIDI note {self.midi_number} outside 0..127")
        if self.duration_tick <= 0 or self.start_tick < 0:
            raise MidiRangeError("note needs a non-negative start and positive duration")
        if not 1 <= self.velocity <= 127:
            raise MidiRangeError(f"velocity {self.velocity} outside 1..127")


def _white_to_semitone(degree: int) -> int:
    octave, step = divmod(degree, 7)
    return MIDDLE_C + 12 * octave + WHITE_OFFSETS[step]


def pitch_class(degree: int) -> int:
    """Semitone pitch class (0 = C) of a white-key degree, any register."""
    return _white_to_semitone(degree) % 12


def white_to_midi(degree: int) -> int:
    midi = _white_to_semitone(degree)
    if not 0 <= midi <= 127:
        raise MidiRangeError(f"white-key degree {degree} maps outside MIDI range ({midi})")
    return midi


def var_len(value: int) -> bytes:
    """MIDI variable-length quantity, 7 bits per byte, high bit = continue."""
    if value < 0:
        raise ValueError("variable-length quantities are non-negative")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def melody_notes(melody: Melody, velocity: int = VELOCITY) -> list[MidiNote]:
    return [
        MidiNote(white_to_midi(p), i * DIVISION, DIVISION, velocity)
        for i, p in enumerate(melody.pitches)
    ]


def write_midi(melody: Melody, tempo_bpm: float = 120, velocity: int = VELOCITY) -> bytes:
    """Standard MIDI File, format 0, one quarter note per pitch."""
    notes = melody_notes(melody, velocity)
    tempo = round(60_000_000 / tempo_bpm)
    track = bytearray()
    track += var_len(0) + b"\xff\x51\x03" + tempo.to_bytes(3, "big")
    for note in notes:
        track += var_len(0) + bytes((0x90, note.midi_number, note.velocity))
        track += var_len(note.duration_tick) + bytes((0x80, note.midi_number, 0))
    track += var_len(0) + b"\xff\x2f\x00"
    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, DIVISION)
    return header + b"MTrk" + struct.pack(">I", len(track)) + bytes(track)


def write_interval_table(melody: Melody) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "span"])
    for i, iv in enumerate(melody.intervals, start=1):
        writer.writerow([i, iv.span])
    return buf.getvalue()


def read_interval_table(text: str) -> list[Interval]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["index", "span"]:
        raise TableFormatError("interval table must start with the header 'index,span'")
    intervals = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            index, span = (int(c) for c in row)
        except ValueError:
            raise TableFormatError(f"line {lineno}: expected two integers, got {row}") from None
        if index != len(intervals) + 1:
            raise TableFormatError(f"line {lineno}: index {index} out of sequence")
        try:
            intervals.append(Interval.from_span(span))
        except ValueError as exc:
            raise TableFormatError(f"line {lineno}: {exc}") from None
    return intervals


def write_histogram(counts: CountsTable) -> str:
    """CSV rows label,count,frequency over every label in binary order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "count", "frequency"])
    for label in all_labels(counts.num_qubits):
        n = counts.counts.get(label, 0)
        writer.writerow([label, n, n / counts.shots])
    return buf.getvalue()


def histogram_record(counts: CountsTable) -> str:
    """JSON companion to the CSV carrying the run metadata."""
    return json.dumps(
        {
            "shots": counts.shots,
            "seed": counts.seed,
            "backend": counts.backend,
            "num_qubits": counts.num_qubits,
            "counts": {label: counts.counts.get(label, 0) for label in all_labels(counts.num_qubits)},
            "frequencies": counts.frequencies(),
        },
        indent=2,
    )

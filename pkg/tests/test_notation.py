import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import read_smf
from qgmuse import qsim
from qgmuse.cli import bundled
from qgmuse.composer import ComposerConfig, Interval, Melody, compose
from qgmuse.errors import MidiRangeError, TableFormatError
from qgmuse.grover import sample_rule
from qgmuse.notation import (
    MidiNote,
    histogram_record,
    pitch_class,
    read_interval_table,
    var_len,
    white_to_midi,
    write_histogram,
    write_interval_table,
    write_midi,
)
from qgmuse.rules import load_rule

WHITE_CLASSES = {0, 2, 4, 5, 7, 9, 11}


def melody_of(pitches):
    return Melody(list(pitches), [Interval(b - a) for a, b in zip(pitches, pitches[1:])])


@pytest.mark.parametrize("degree,midi", [(0, 60), (7, 72), (-1, 59), (4, 67), (-7, 48), (1, 62)])
def test_white_to_midi(degree, midi):
    assert white_to_midi(degree) == midi


def test_white_to_midi_range():
    assert white_to_midi(-35) == 0
    with pytest.raises(MidiRangeError):
        white_to_midi(-36)
    with pytest.raises(MidiRangeError):
        white_to_midi(40)
    assert white_to_midi(39) == 127


def test_pitch_classes_are_white():
    for d in range(-21, 22):
        assert white_to_midi(d) % 12 in WHITE_CLASSES
        assert pitch_class(d) == white_to_midi(d) % 12


@pytest.mark.parametrize(
    "value,encoded",
    [(0, b"\x00"), (0x40, b"\x40"), (0x7F, b"\x7f"), (0x80, b"\x81\x00"), (480, b"\x83\x60"),
     (0x3FFF, b"\xff\x7f"), (0x200000, b"\x81\x80\x80\x00")],
)
def test_var_len(value, encoded):
    assert var_len(value) == encoded


def test_midi_note_validation():
    with pytest.raises(MidiRangeError):
        MidiNote(128, 0, 480)
    with pytest.raises(MidiRangeError):
        MidiNote(60, 0, 0)


def test_single_note_midi_bytes():
    data = write_midi(melody_of([0]))
    assert data[:14] == b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x01\xe0"
    track = data[22:]
    assert track.startswith(b"\x00\xff\x51\x03\x07\xa1\x20")  # 500000 us per quarter
    assert b"\x00\x90\x3c\x50" in track
    assert b"\x83\x60\x80\x3c\x00" in track
    assert track.endswith(b"\x00\xff\x2f\x00")
    fmt, ntrks, division, tempo, notes = read_smf(data)
    assert (fmt, ntrks, division, tempo) == (0, 1, 480, 500000)
    assert notes == [(60, 80, 0, 480)]


def test_empty_melody_midi():
    data = write_midi(Melody([]))
    fmt, ntrks, division, tempo, notes = read_smf(data)
    assert notes == [] and tempo == 500000


def test_midi_round_trip_32_notes():
    melody = compose(ComposerConfig(seed=2, backend="scripted", script=("000", "010")))
    fmt, _, _, _, notes = read_smf(write_midi(melody))
    assert fmt == 0
    assert len(notes) == 32
    assert [n[0] for n in notes] == [white_to_midi(p) for p in melody.pitches]
    assert [n[2] for n in notes] == [480 * i for i in range(32)]
    assert all(n[3] - n[2] == 480 for n in notes)
    assert notes[-1][3] == 32 * 480  # eight bars of 4/4


def test_midi_tempo_override():
    _, _, _, tempo, _ = read_smf(write_midi(melody_of([0, 1]), tempo_bpm=90))
    assert tempo == 666667


def test_midi_out_of_range():
    with pytest.raises(MidiRangeError):
        write_midi(melody_of([0, -40]))


def test_interval_table_examples():
    assert write_interval_table(melody_of([0, 0])) == "index,span\n1,0\n"
    assert write_interval_table(melody_of([0, 2])) == "index,span\n1,3\n"


def test_interval_table_reproduces_table2():
    text = bundled("melody_a_table2.csv").read_text()
    spans = [iv.span for iv in read_interval_table(text)]
    melody = Melody.from_spans(spans)
    assert melody.pitches[0] == 0
    assert write_interval_table(melody) == text
    assert spans[:5] == [0, -2, -2, -2, -2] and spans[14] == 9


@given(st.lists(st.integers(-9, 9).filter(lambda s: abs(s) != 1), min_size=1, max_size=20),
       st.lists(st.integers(-9, 9).filter(lambda s: abs(s) != 1), min_size=1, max_size=20))
def test_interval_table_injective(a, b):
    ta = write_interval_table(Melody.from_spans(a))
    tb = write_interval_table(Melody.from_spans(b))
    assert (ta == tb) == (a == b)


@pytest.mark.parametrize(
    "text",
    ["", "i,s\n1,2\n", "index,span\n1,x\n", "index,span\n2,3\n", "index,span\n1,1\n"],
)
def test_read_interval_table_rejects(text):
    with pytest.raises(TableFormatError):
        read_interval_table(text)


def test_histogram_one_qubit():
    counts = qsim.CountsTable(1, {"1": 100}, 100)
    assert write_histogram(counts) == "label,count,frequency\n0,0,0.0\n1,100,1.0\n"


def test_histogram_grover_and_record():
    counts = sample_rule(load_rule(bundled("eq25.rule")), 1, 4096, seed=8)
    rows = write_histogram(counts).splitlines()
    assert rows[0] == "label,count,frequency"
    assert [r.split(",")[0] for r in rows[1:]] == [format(i, "03b") for i in range(8)]
    freqs = [float(r.split(",")[2]) for r in rows[1:]]
    assert abs(sum(freqs) - 1) < 1e-9
    assert abs(freqs[0] - 25 / 32) < 0.02
    record = json.loads(histogram_record(counts))
    assert record["shots"] == 4096 and record["seed"] == 8 and record["backend"] == "ideal"
    assert abs(sum(record["frequencies"].values()) - 1) < 1e-9


def test_histogram_uniform():
    c = qsim.Circuit(3, [qsim.h(0), qsim.h(1), qsim.h(2)])
    rows = write_histogram(qsim.sample(c, 4096, seed=1)).splitlines()[1:]
    assert len(rows) == 8
    assert all(abs(float(r.split(",")[2]) - 0.125) < 0.05 for r in rows)

"""End-to-end acceptance gate.

Each criterion prints one ``[PASS]`` or ``[FAIL]`` line (run with ``-s`` to see
them) and then asserts, so a red criterion is also a red test.
"""

import random
import time

import numpy as np
import pytest

from oracles import (
    brute_truth_table,
    closed_form_success,
    diffusion_projector_form,
    phase_normalize,
    random_expr,
    read_smf,
    three_sigma,
)
from qgmuse import qsim
from qgmuse.cli import bundled
from qgmuse.composer import ComposerConfig, actual_LI, analyze, compose
from qgmuse.errors import CapacityError, MidiRangeError
from qgmuse.grover import (
    build_diagonal_oracle,
    build_diffusion,
    build_grover,
    optimal_iterations,
    sample_rule,
    synthesize_oracle_circuit,
)
from qgmuse.notation import pitch_class, read_interval_table, write_midi
from qgmuse.rules import evaluate, load_rule, parse_rule, solution_count, variables

WHITE_CLASSES = {0, 2, 4, 5, 7, 9, 11}
EQ25 = load_rule(bundled("eq25.rule"))
# Gates whose matrices have exactly one nonzero entry per column.
MONOMIAL_KINDS = {"X", "Z", "T", "TDG", "CNOT", "CCX", "MCX", "CCZ", "MCZ"}


def report(number, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    assert ok, detail


def test_criterion_1_one_iteration():
    t0 = time.perf_counter()
    freq = sample_rule(EQ25, 1, 4096, seed=1).frequency("000")
    elapsed = time.perf_counter() - t0
    report(1, 0.761 <= freq <= 0.801 and elapsed < 1.0,
           f"freq('000') = {freq:.4f} (exact 25/32), {elapsed:.3f} s")


def test_criterion_2_two_iterations():
    freq = sample_rule(EQ25, 2, 4096, seed=2).frequency("000")
    report(2, 0.930 <= freq <= 0.960, f"freq('000') = {freq:.4f} (exact 121/128)")


def test_criterion_3_diffusion_identity():
    worst = 0.0
    for n in range(1, 5):
        u = qsim.circuit_unitary(build_diffusion(n))
        worst = max(worst, float(np.max(np.abs(phase_normalize(u) - phase_normalize(diffusion_projector_form(n))))))
    report(3, worst <= 1e-9, f"max deviation {worst:.2e} over n = 1..4")


def oracle_deviation(expr, circuit, rng):
    """Deviation of the circuit from (-1)^r(x) with ancillas at |0>.

    Small registers are checked column by column. Larger ones are checked on
    one random complex superposition of the variable register: a circuit
    built only from permutation/phase gates is a monomial matrix, so matching
    generic distinct amplitudes pins down its action on every basis input.
    """
    names = variables(expr)
    nv = len(names)
    signs = np.array(
        [(-1) ** evaluate(expr, {v: (i >> k) & 1 for k, v in enumerate(names)}) for i in range(1 << nv)],
        dtype=float,
    )
    dim = 1 << circuit.num_qubits
    if circuit.num_qubits <= 12:
        inputs = np.zeros((dim, 1 << nv), dtype=complex)
        inputs[np.arange(1 << nv), np.arange(1 << nv)] = 1
        return float(np.max(np.abs(qsim.evolve(circuit, inputs) - inputs * signs)))
    assert all(op.kind in MONOMIAL_KINDS for op in circuit.ops)
    amps = rng.normal(size=1 << nv) + 1j * rng.normal(size=1 << nv)
    state = np.zeros(dim, dtype=complex)
    state[: 1 << nv] = amps
    expected = np.zeros(dim, dtype=complex)
    expected[: 1 << nv] = amps * signs
    return float(np.max(np.abs(qsim.evolve(circuit, state) - expected)))


def test_criterion_4_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    pyrng = random.Random(4)
    fixtures = [parse_rule("!(LI_prev ^ DC_t)"), parse_rule("!LI_prev & !LI_t"), EQ25,
                load_rule(bundled("eq8.rule"))]
    worst, checked = 0.0, 0
    for e in fixtures:
        worst = max(worst, oracle_deviation(e, synthesize_oracle_circuit(e), rng))
        # The diagonal form must agree with brute force too.
        names = variables(e)
        sat = brute_truth_table(lambda bits: evaluate(e, dict(zip(names, bits))), len(names))
        diag = build_diagonal_oracle(e)
        assert set(np.flatnonzero(diag < 0)) == sat
    while checked < 500:
        e = random_expr(pyrng, [f"v{i}" for i in range(6)], pyrng.choice([2, 3, 4]))
        try:
            c = synthesize_oracle_circuit(e)
        except CapacityError:
            continue
        if c.num_qubits > 16:
            continue
        worst = max(worst, oracle_deviation(e, c, rng))
        checked += 1
    elapsed = time.perf_counter() - t0
    report(4, worst <= 1e-9 and elapsed < 30,
           f"{checked} random + 4 fixtures, max deviation {worst:.2e}, {elapsed:.1f} s")


def test_criterion_5_amplification_law():
    pyrng = random.Random(5)
    done, misses, seed = 0, [], 0
    while done < 50:
        e = random_expr(pyrng, ["a", "b", "c", "d", "e"], 3)
        m = solution_count(e)
        try:
            c = synthesize_oracle_circuit(e)
        except CapacityError:
            continue
        if m == 0 or c.num_qubits > 14:
            continue
        names = variables(e)
        n = len(names)
        sat = {format(i, f"0{n}b") for i in range(1 << n)
               if evaluate(e, {v: (i >> k) & 1 for k, v in enumerate(names)})}
        k = 1 + done % 2
        seed += 1
        counts = sample_rule(e, k, 4096, seed=seed)
        freq = sum(counts.counts.get(s, 0) for s in sat) / 4096
        p = closed_form_success(n, m, k)
        if abs(freq - p) > three_sigma(p, 4096) + 1e-12:
            misses.append((str(e), k, freq, p))
        done += 1
    report(5, not misses, f"50 expressions, {len(misses)} outside 3 sigma {misses[:3]}")


def test_criterion_6_table2():
    a = analyze(read_interval_table(bundled("melody_a_table2.csv").read_text()))
    b = analyze(read_interval_table(bundled("melody_b_table2.csv").read_text()))
    ok = (set(a.broken) == {15, 20, 27} and set(a.followed) == {22, 24}
          and set(b.broken) == {24, 28} and not b.followed
          and len(a.broken) + len(b.broken) == 5 and len(a.followed) + len(b.followed) == 2)
    report(6, ok, f"A broken {a.broken} followed {a.followed}; B broken {b.broken} followed {b.followed}")


def invariant_violations(melody):
    problems = []
    if any(pitch_class(p) not in WHITE_CLASSES for p in melody.pitches):
        problems.append("non-white pitch")
    direction, prev = 0, None
    for i, (iv, rec) in enumerate(zip(melody.intervals, melody.steps), start=1):
        span = iv.span
        if abs(span) > 8 or abs(span) == 1 or (rec.flags.LI_t == 0 and abs(span) > 3):
            problems.append(f"step {i}: span {span} with LI_t={rec.flags.LI_t}")
        if rec.flags.LI_prev != actual_LI(prev):
            problems.append(f"step {i}: LI_prev mismatch")
        if rec.flags.DC_t == 0 and iv.steps and direction and np.sign(iv.steps) != direction:
            problems.append(f"step {i}: direction changed under DC_t=0")
        if iv.steps:
            direction = int(np.sign(iv.steps))
        prev = iv
    if [p2 - p1 for p1, p2 in zip(melody.pitches, melody.pitches[1:])] != [iv.steps for iv in melody.intervals]:
        problems.append("pitches and intervals disagree")
    return problems


def test_criterion_7_composer_invariants():
    t0 = time.perf_counter()
    bad = {}
    for seed in range(100):
        cfg = ComposerConfig(num_notes=32, seed=seed)
        m = compose(cfg)
        problems = invariant_violations(m)
        if len(m.pitches) != 32:
            problems.append("wrong length")
        if compose(cfg) != m:
            problems.append("not deterministic")
        if problems:
            bad[seed] = problems
    elapsed = time.perf_counter() - t0
    report(7, not bad and elapsed < 10, f"100 seeds, {len(bad)} violating, {elapsed:.2f} s {dict(list(bad.items())[:2])}")


def test_criterion_8_noise_monotonicity():
    _, circuit = build_grover(EQ25, 1)
    circuit = qsim.decompose(circuit)
    levels = [(1.0, 1.0), (0.997, 0.958), (0.99, 0.90)]
    freqs = [
        qsim.sample(circuit, 4096, seed=80 + i, noise=qsim.NoiseConfig(f1, f2), measure=(0, 1, 2)).frequency("000")
        for i, (f1, f2) in enumerate(levels)
    ]
    gaps_ok = all(
        hi - lo > 3 * np.sqrt(hi * (1 - hi) / 4096 + lo * (1 - lo) / 4096)
        for hi, lo in zip(freqs, freqs[1:])
    )
    report(8, gaps_ok, "freq('000') at " + ", ".join(f"{lv}: {f:.4f}" for lv, f in zip(levels, freqs)))


def test_criterion_9_eq8_end_to_end(eq8_fixture):
    t0 = time.perf_counter()
    e = load_rule(bundled("eq8.rule"))
    names = variables(e)
    n = len(names)
    m = solution_count(e)
    k = optimal_iterations(n, m)
    counts = sample_rule(e, k, 4096, seed=9)
    sat = brute_truth_table(lambda bits: evaluate(e, dict(zip(names, bits))), n)
    freq = sum(counts.counts.get(format(i, f"0{n}b"), 0) for i in sat) / 4096
    p = closed_form_success(n, m, k)
    elapsed = time.perf_counter() - t0
    ok = (m == eq8_fixture["solutions"] and k == eq8_fixture["auto_iterations"]
          and abs(p - eq8_fixture["predicted_success"]) < 1e-12
          and abs(freq - p) <= three_sigma(p, 4096) and elapsed < 10)
    report(9, ok, f"M = {m}, k = {k}, freq {freq:.4f} vs {p:.5f}, {elapsed:.2f} s")


def test_criterion_10_midi_round_trip():
    # The ideal composer is an unbounded walk; some seeds leave the MIDI
    # range, which the writer rejects. Take the first seed that stays inside.
    for seed in range(100):
        melody = compose(ComposerConfig(num_notes=32, seed=seed))
        try:
            data = write_midi(melody)
        except MidiRangeError:
            continue
        break
    else:
        pytest.fail("no in-range composition among 100 seeds")
    fmt, ntrks, division, _, notes = read_smf(data)
    ok = (fmt == 0 and ntrks == 1 and division == 480 and len(notes) == 32
          and all(n[0] % 12 in WHITE_CLASSES for n in notes)
          and all(n[3] - n[2] == 480 for n in notes)
          and [n[2] for n in notes] == [480 * i for i in range(32)])
    report(10, ok, f"seed {seed}: {len(notes)} notes, format {fmt}, division {division}")

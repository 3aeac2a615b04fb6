"""Small state-vector simulator with an optional Pauli-trajectory noise mode.

Basis index convention: bit ``i`` of an amplitude index is the value of
qubit ``i``.  Measurement labels print the highest-index qubit first, so
on three qubits the label ``"100"`` means q2 = 1 and q0 = q1 = 0.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CircuitError,
    ConfigurationError,
    MustDecomposeError,
    UnsupportedGateError,
)

MAX_QUBITS = 20

ONE_QUBIT_KINDS = frozenset({"H", "X", "Z", "T", "TDG"})
MULTI_QUBIT_KINDS = frozenset({"CNOT", "CCX", "MCX", "CCZ", "MCZ"})
GATE_KINDS = ONE_QUBIT_KINDS | MULTI_QUBIT_KINDS
# Gates allowed in a circuit handed to apply_noise.
NOISE_BASIS = ONE_QUBIT_KINDS | {"CNOT"}

_FIXED_ARITY = {"H": 1, "X": 1, "Z": 1, "T": 1, "TDG": 1, "CNOT": 2, "CCX": 3, "CCZ": 3}
_INVERSE_KIND = {"T": "TDG", "TDG": "T"}
_SQRT_HALF = 1.0 / np.sqrt(2.0)
_T_PHASE = np.exp(1j * np.pi / 4)


@dataclass(frozen=True)
class GateOp:
    """One gate application.

    For controlled gates the controls come first and the target last
    (``CNOT``, ``CCX``, ``MCX``).  ``CCZ`` and ``MCZ`` are symmetric: they
    negate the amplitude of every basis state where all listed qubits are 1.
    """

    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        arity = _FIXED_ARITY.get(self.kind)
        if arity is not None and len(self.qubits) != arity:
            raise CircuitError(f"{self.kind} takes {arity} qubit(s), got {len(self.qubits)}")
        if self.kind == "MCX" and len(self.qubits) < 2:
            raise CircuitError("MCX needs at least one control and a target")
        if self.kind == "MCZ" and len(self.qubits) < 1:
            raise CircuitError("MCZ needs at least one qubit")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.kind} qubits must be distinct: {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.qubits}")

    @property
    def inverse(self) -> GateOp:
        return GateOp(_INVERSE_KIND.get(self.kind, self.kind), self.qubits)

    def __str__(self):
        return f"{self.kind} {','.join(f'q{q}' for q in self.qubits)}"


def h(q):
    return GateOp("H", (q,))


def x(q):
    return GateOp("X", (q,))


def z(q):
    return GateOp("Z", (q,))


def t(q):
    return GateOp("T", (q,))


def tdg(q):
    return GateOp("TDG", (q,))


def cnot(control, target):
    return GateOp("CNOT", (control, target))


def ccx(c0, c1, target):
    return GateOp("CCX", (c0, c1, target))


def ccz(q0, q1, q2):
    return GateOp("CCZ", (q0, q1, q2))


def mcx(controls: Sequence[int], target: int) -> GateOp:
    """Multi-controlled X, collapsed to X/CNOT/CCX where the arity allows."""
    controls = tuple(controls)
    if not controls:
        return x(target)
    if len(controls) == 1:
        return cnot(controls[0], target)
    if len(controls) == 2:
        return ccx(controls[0], controls[1], target)
    return GateOp("MCX", controls + (target,))


def mcz(qubits: Iterable[int]) -> GateOp:
    qubits = tuple(qubits)
    if len(qubits) == 1:
        return z(qubits[0])
    return GateOp("MCZ", qubits)


@dataclass
class Circuit:
    num_qubits: int
    ops: list[GateOp] = field(default_factory=list)

    def __post_init__(self):
        _check_num_qubits(self.num_qubits)
        self.ops = list(self.ops)
        for op in self.ops:
            self._check(op)

    def _check(self, op: GateOp):
        if max(op.qubits) >= self.num_qubits:
            raise CircuitError(f"{op} references a qubit outside 0..{self.num_qubits - 1}")

    def append(self, op: GateOp) -> Circuit:
        self._check(op)
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable[GateOp]) -> Circuit:
        for op in ops:
            self.append(op)
        return self

    def inverse(self) -> Circuit:
        return Circuit(self.num_qubits, [op.inverse for op in reversed(self.ops)])

    def count(self, kind: str) -> int:
        return sum(op.kind == kind for op in self.ops)

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def __str__(self):
        return "\n".join(str(op) for op in self.ops)


@dataclass(frozen=True)
class NoiseConfig:
    """Per-gate success probabilities for the Pauli-injection noise model."""

    fidelity_1q: float = 0.997
    fidelity_2q: float = 0.958
    enabled: bool = True

    def __post_init__(self):
        for name in ("fidelity_1q", "fidelity_2q"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")

    @classmethod
    def ideal(cls) -> NoiseConfig:
        return cls(1.0, 1.0, enabled=False)

    @property
    def active(self) -> bool:
        return self.enabled and (self.fidelity_1q < 1.0 or self.fidelity_2q < 1.0)

    def describe(self) -> str:
        if not self.enabled:
            return "ideal"
        return f"noisy(fidelity_1q={self.fidelity_1q}, fidelity_2q={self.fidelity_2q})"


# Published two-level gate fidelities of the IBM devices.
IBMQX4 = NoiseConfig(0.997, 0.958)
MELBOURNE = NoiseConfig(0.997, 0.928)


class StateVector:
    """Amplitudes of an ``num_qubits`` register, index bit i = qubit i."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes):
        _check_num_qubits(num_qubits)
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << num_qubits,):
            raise ConfigurationError(
                f"expected {1 << num_qubits} amplitudes, got shape {amplitudes.shape}"
            )
        self.num_qubits = num_qubits
        self.amplitudes = amplitudes

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits}, amplitudes={self.amplitudes!r})"


@dataclass
class CountsTable:
    """Shot histogram keyed by measured bitstrings (highest qubit leftmost)."""

    num_qubits: int
    counts: dict[str, int]
    shots: int
    seed: int | None = None
    backend: str = "ideal"

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ConfigurationError("counts do not sum to shots")
        for label, n in self.counts.items():
            if len(label) != self.num_qubits or set(label) - {"0", "1"}:
                raise ConfigurationError(f"bad label {label!r} for {self.num_qubits} qubits")
            if n < 0:
                raise ConfigurationError(f"negative count for {label!r}")

    def frequency(self, label: str) -> float:
        return self.counts.get(label, 0) / self.shots

    def frequencies(self) -> dict[str, float]:
        return {label: self.frequency(label) for label in all_labels(self.num_qubits)}

    def most_common(self) -> tuple[str, int]:
        return max(sorted(self.counts.items()), key=lambda kv: kv[1])


def all_labels(num_qubits: int) -> list[str]:
    return [format(i, f"0{num_qubits}b") for i in range(1 << num_qubits)]


def _check_num_qubits(n):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise ConfigurationError(f"num_qubits must be in 1..{MAX_QUBITS}, got {n!r}")


def init_state(num_qubits: int) -> StateVector:
    _check_num_qubits(num_qubits)
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


@lru_cache(maxsize=512)
def _pair_indices(num_qubits: int, control_mask: int, target_bit: int):
    """Indices with all controls set and target clear, plus their partners."""
    idx = np.arange(1 << num_qubits)
    low = idx[((idx & control_mask) == control_mask) & ((idx & target_bit) == 0)]
    return low, low | target_bit


@lru_cache(maxsize=512)
def _ones_indices(num_qubits: int, mask: int):
    idx = np.arange(1 << num_qubits)
    return idx[(idx & mask) == mask]


def _mask(qubits):
    m = 0
    for q in qubits:
        m |= 1 << q
    return m


def _apply_inplace(amps: np.ndarray, op: GateOp, num_qubits: int) -> None:
    """Apply ``op`` along axis 0 of ``amps`` (trailing axes are a batch)."""
    kind, qs = op.kind, op.qubits
    if kind == "H":
        lo, hi = _pair_indices(num_qubits, 0, 1 << qs[0])
        a0, a1 = amps[lo], amps[hi]
        amps[lo] = (a0 + a1) * _SQRT_HALF
        amps[hi] = (a0 - a1) * _SQRT_HALF
    elif kind in ("X", "CNOT", "CCX", "MCX"):
        lo, hi = _pair_indices(num_qubits, _mask(qs[:-1]), 1 << qs[-1])
        amps[lo], amps[hi] = amps[hi], amps[lo].copy()
    elif kind in ("Z", "CCZ", "MCZ"):
        amps[_ones_indices(num_qubits, _mask(qs))] *= -1.0
    elif kind == "T":
        amps[_ones_indices(num_qubits, _mask(qs))] *= _T_PHASE
    elif kind == "TDG":
        amps[_ones_indices(num_qubits, _mask(qs))] *= np.conj(_T_PHASE)
    else:  # pragma: no cover - GateOp validates kinds
        raise UnsupportedGateError(kind)


def _check_op(op: GateOp, num_qubits: int):
    if max(op.qubits) >= num_qubits:
        raise CircuitError(f"{op} references a qubit outside 0..{num_qubits - 1}")


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    _check_op(op, state.num_qubits)
    amps = state.amplitudes.copy()
    _apply_inplace(amps, op, state.num_qubits)
    return StateVector(state.num_qubits, amps)


def evolve(circuit: Circuit, amplitudes: np.ndarray) -> np.ndarray:
    """Run ``circuit`` on a raw amplitude array of shape ``(2**n, ...)``.

    Extra trailing axes are treated as independent states, so passing the
    identity matrix yields the circuit unitary column by column.
    """
    amps = np.array(amplitudes, dtype=np.complex128, copy=True)
    if amps.shape[0] != 1 << circuit.num_qubits:
        raise CircuitError(
            f"circuit has {circuit.num_qubits} qubits, state has {amps.shape[0]} amplitudes"
        )
    for op in circuit.ops:
        _apply_inplace(amps, op, circuit.num_qubits)
    return amps


def run_circuit(circuit: Circuit, initial: StateVector | None = None) -> StateVector:
    if initial is None:
        initial = init_state(circuit.num_qubits)
    if initial.num_qubits != circuit.num_qubits:
        raise CircuitError(
            f"circuit has {circuit.num_qubits} qubits but state has {initial.num_qubits}"
        )
    return StateVector(circuit.num_qubits, evolve(circuit, initial.amplitudes))


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    return evolve(circuit, np.eye(1 << circuit.num_qubits, dtype=np.complex128))


def probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def marginal(probs: np.ndarray, num_qubits: int, measure: Sequence[int]) -> np.ndarray:
    """Distribution over ``measure`` (``measure[i]`` becomes bit i of the result)."""
    measure = tuple(measure)
    if tuple(range(num_qubits)) == measure:
        return probs
    idx = np.arange(1 << num_qubits)
    out_idx = np.zeros_like(idx)
    for i, q in enumerate(measure):
        out_idx |= ((idx >> q) & 1) << i
    return np.bincount(out_idx, weights=probs, minlength=1 << len(measure))


def global_phase_aligned(matrix: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Rescale so the first nonzero entry is real positive."""
    flat = matrix.ravel()
    nz = np.flatnonzero(np.abs(flat) > atol)
    if nz.size == 0:
        return matrix
    first = flat[nz[0]]
    return matrix * (abs(first) / first)


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    return float(np.max(np.abs(global_phase_aligned(a) - global_phase_aligned(b)))) <= atol


def _ccz_ops(a: int, b: int, c: int) -> list[GateOp]:
    # Toffoli network without the Hadamards on the target: 6 CNOT, 7 T/T†.
    return [
        cnot(b, c), tdg(c), cnot(a, c), t(c), cnot(b, c), tdg(c), cnot(a, c),
        t(b), t(c), cnot(a, b), t(a), tdg(b), cnot(a, b),
    ]


def decompose(circuit: Circuit) -> Circuit:
    """Rewrite into {H, X, Z, T, TDG, CNOT}; multi-controlled gates need <= 2 controls."""
    out = Circuit(circuit.num_qubits)
    for op in circuit.ops:
        kind, qs = op.kind, op.qubits
        if kind in NOISE_BASIS:
            out.append(op)
        elif kind == "CCZ" or (kind == "MCZ" and len(qs) == 3):
            out.extend(_ccz_ops(*qs))
        elif kind == "MCZ" and len(qs) == 2:
            out.extend([h(qs[1]), cnot(qs[0], qs[1]), h(qs[1])])
        elif kind == "MCZ" and len(qs) == 1:
            out.append(z(qs[0]))
        elif kind == "CCX" or (kind == "MCX" and len(qs) == 3):
            out.extend([h(qs[2]), *_ccz_ops(*qs), h(qs[2])])
        elif kind == "MCX" and len(qs) == 2:
            out.append(cnot(*qs))
        else:
            raise UnsupportedGateError(f"cannot decompose {op}: more than 2 controls")
    return out


_PAULIS_1Q = ("X", "Y", "Z")
_PAULIS_2Q = tuple((p, r) for p in ("I",) + _PAULIS_1Q for r in ("I",) + _PAULIS_1Q)[1:]


def _pauli_ops(pauli: str, q: int) -> list[GateOp]:
    if pauli == "I":
        return []
    if pauli == "Y":
        # Z·X = iY; the global phase is unobservable.
        return [x(q), z(q)]
    return [GateOp(pauli, (q,))]


def apply_noise(circuit: Circuit, noise: NoiseConfig, rng: np.random.Generator) -> Circuit:
    """One stochastic trajectory of ``circuit`` under Pauli-injection noise.

    After each 1-qubit gate a uniformly chosen X/Y/Z hits that qubit with
    probability ``1 - fidelity_1q``; after each CNOT one of the 15
    non-identity two-qubit Paulis hits the pair with probability
    ``1 - fidelity_2q``.
    """
    bad = {op.kind for op in circuit.ops} - NOISE_BASIS
    if bad:
        raise MustDecomposeError(f"decompose the circuit first; found {sorted(bad)}")
    if not noise.active:
        return Circuit(circuit.num_qubits, list(circuit.ops))
    out = Circuit(circuit.num_qubits)
    for op in circuit.ops:
        out.append(op)
        if op.kind == "CNOT":
            if rng.random() < 1.0 - noise.fidelity_2q:
                p0, p1 = _PAULIS_2Q[rng.integers(len(_PAULIS_2Q))]
                out.extend(_pauli_ops(p0, op.qubits[0]) + _pauli_ops(p1, op.qubits[1]))
        elif rng.random() < 1.0 - noise.fidelity_1q:
            out.extend(_pauli_ops(_PAULIS_1Q[rng.integers(3)], op.qubits[0]))
    return out


def _partition_shots(shots: int, partitions: int) -> list[int]:
    base, extra = divmod(shots, partitions)
    return [base + (i < extra) for i in range(partitions)]


def sample(
    circuit: Circuit,
    shots: int,
    seed: int = 0,
    noise: NoiseConfig | None = None,
    measure: Sequence[int] | None = None,
    partitions: int = 1,
) -> CountsTable:
    """Measure ``circuit`` ``shots`` times starting from |0...0>.

    Ideal mode runs the circuit once and draws from the final distribution;
    noisy mode re-runs a fresh noisy trajectory per shot.  ``measure`` picks
    the qubits that appear in the labels (default: all).  Partition ``i``
    draws its share of the shots from a generator seeded with ``seed ^ i``;
    partition counts are merged by addition.
    """
    if shots < 1:
        raise ConfigurationError(f"shots must be >= 1, got {shots}")
    if partitions < 1:
        raise ConfigurationError(f"partitions must be >= 1, got {partitions}")
    noise = noise or NoiseConfig.ideal()
    measure = tuple(range(circuit.num_qubits)) if measure is None else tuple(measure)
    if any(q >= circuit.num_qubits for q in measure):
        raise CircuitError("measured qubit outside the circuit")
    width = len(measure)

    ideal = marginal(probabilities(run_circuit(circuit)), circuit.num_qubits, measure)
    ideal = ideal / ideal.sum()
    noisy = noise.enabled
    if noisy:
        bad = {op.kind for op in circuit.ops} - NOISE_BASIS
        if bad:
            raise MustDecomposeError(f"decompose the circuit first; found {sorted(bad)}")

    totals: Counter[int] = Counter()
    for part, n in enumerate(_partition_shots(shots, partitions)):
        if n == 0:
            continue
        rng = np.random.default_rng(seed ^ part)
        if not noisy:
            drawn = rng.multinomial(n, ideal)
            totals.update({i: int(c) for i, c in enumerate(drawn) if c})
            continue
        ideal_cdf = np.cumsum(ideal)
        for _ in range(n):
            trajectory = apply_noise(circuit, noise, rng)
            if len(trajectory) == len(circuit):
                cdf = ideal_cdf
            else:
                p = marginal(probabilities(run_circuit(trajectory)), circuit.num_qubits, measure)
                cdf = np.cumsum(p)
            outcome = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            totals[min(outcome, len(cdf) - 1)] += 1

    counts = {format(i, f"0{width}b"): c for i, c in sorted(totals.items())}
    return CountsTable(width, counts, shots, seed=seed, backend=noise.describe())

"""Compile Boolean rules into phase oracles and Grover search circuits.

Oracle synthesis is compute, phase, uncompute.  Sub-terms that are not
plain (possibly negated) variables are XOR-accumulated into fresh ancilla
qubits allocated after the variable qubits; the phase is applied with Z or
multi-controlled Z; then every ancilla computation is replayed in reverse
so all ancillas return to |0>.

Rules shaped as a conjunction of variables, negated variables and XORs of
two variables get an ancilla-free circuit instead: each XOR is folded into
one of its operands with a CNOT, the conjunction becomes one MCZ, and the
CNOTs are undone afterwards.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import qsim
from .errors import CapacityError, ConfigurationError, SchedulingError, SynthesisError
from .qsim import Circuit, GateOp, NoiseConfig, cnot, h, mcx, mcz, x, z
from .rules import (
    MAX_VARS,
    And,
    BoolExpr,
    Not,
    Or,
    Var,
    Xor,
    enumerate_solutions,
    truth_vector,
    variables,
    walk,
)


@dataclass(frozen=True)
class OraclePair:
    diagonal: np.ndarray
    circuit: Circuit

    @property
    def num_vars(self) -> int:
        return int(self.diagonal.size).bit_length() - 1


@dataclass(frozen=True)
class GroverPlan:
    expr: BoolExpr
    num_vars: int
    num_qubits: int
    iterations: int
    ancilla_count: int
    num_solutions: int

    @property
    def status(self) -> str:
        return "ok" if self.num_solutions else "no-solutions"

    @property
    def measured_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.num_vars))


def build_diagonal_oracle(expr: BoolExpr) -> np.ndarray:
    """+1/-1 per basis index: -1 exactly where the rule holds."""
    names = variables(expr)
    if len(names) > MAX_VARS:
        raise CapacityError(f"{len(names)} variables exceeds the limit of {MAX_VARS}")
    return np.where(truth_vector(expr, names), -1.0, 1.0)


def _strip_not(node: BoolExpr) -> tuple[BoolExpr, bool]:
    negated = False
    while isinstance(node, Not):
        node = node.child
        negated = not negated
    return node, negated


def _merge_literals(literals):
    """Deduplicate (qubit, negated) pairs; None if two of them contradict."""
    seen: dict[int, bool] = {}
    for q, neg in literals:
        if seen.get(q, neg) != neg:
            return None
        seen[q] = neg
    return list(seen.items())


class _Synthesizer:
    def __init__(self, names: list[str]):
        self.qubit_of = {name: i for i, name in enumerate(names)}
        self.num_vars = len(names)
        self.next_qubit = len(names)
        self.compute: list[GateOp] = []
        self.phase: list[GateOp] = []
        self.sign_flip = False

    def fresh(self) -> int:
        q = self.next_qubit
        self.next_qubit += 1
        return q

    def literal(self, node: BoolExpr) -> tuple[int, bool]:
        node, negated = _strip_not(node)
        if isinstance(node, Var):
            return self.qubit_of[node.name], negated
        q = self.fresh()
        self.xor_into(node, q)
        return q, negated

    def xor_into(self, node: BoolExpr, target: int) -> None:
        """Append gates computing target ^= node(x)."""
        node, negated = _strip_not(node)
        if isinstance(node, Var):
            self.compute.append(cnot(self.qubit_of[node.name], target))
        elif isinstance(node, Xor):
            self.xor_into(node.left, target)
            self.xor_into(node.right, target)
        elif isinstance(node, And):
            self._controlled_x([self.literal(c) for c in node.children], target)
        elif isinstance(node, Or):
            # De Morgan: target ^= NOR(children), then one X turns it into OR.
            lits = [self.literal(c) for c in node.children]
            self._controlled_x([(q, not neg) for q, neg in lits], target)
            negated = not negated
        else:
            raise SynthesisError(f"unsupported node {node!r}")
        if negated:
            self.compute.append(x(target))

    def _controlled_x(self, literals, target):
        merged = _merge_literals(literals)
        if merged is None:
            return  # contradictory conjunction is constantly 0
        flips = [x(q) for q, neg in merged if neg]
        self.compute.extend(flips)
        self.compute.append(mcx([q for q, _ in merged], target))
        self.compute.extend(flips)

    def phase_of(self, node: BoolExpr) -> None:
        """Append gates multiplying |x> by (-1)^node(x)."""
        node, negated = _strip_not(node)
        if isinstance(node, Var):
            q = self.qubit_of[node.name]
            self.phase.extend([x(q), z(q), x(q)] if negated else [z(q)])
            return
        if isinstance(node, Xor):
            self.phase_of(node.left)
            self.phase_of(node.right)
        elif isinstance(node, And):
            self.phase_and([self.literal(c) for c in node.children])
        elif isinstance(node, Or):
            q = self.fresh()
            self.xor_into(node, q)
            self.phase.extend([x(q), z(q), x(q)] if negated else [z(q)])
            return
        else:
            raise SynthesisError(f"unsupported node {node!r}")
        if negated:
            self.sign_flip = not self.sign_flip

    def phase_and(self, literals):
        merged = _merge_literals(literals)
        if merged is None:
            return
        flips = [x(q) for q, neg in merged if neg]
        self.phase.extend(flips)
        self.phase.append(mcz(sorted(q for q, _ in merged)))
        self.phase.extend(flips)

    def circuit(self) -> Circuit:
        phase = list(self.phase)
        if self.sign_flip:
            # X·Z·X·Z = -I, an exact global sign.
            phase += [x(0), z(0), x(0), z(0)]
        ops = self.compute + phase + [op.inverse for op in reversed(self.compute)]
        if self.next_qubit > qsim.MAX_QUBITS:
            raise CapacityError(
                f"oracle needs {self.next_qubit} qubits, simulator limit is {qsim.MAX_QUBITS}"
            )
        return Circuit(self.next_qubit, ops)


def _in_place_oracle(expr: BoolExpr, names: list[str]) -> Circuit | None:
    """Ancilla-free oracle for conjunctions of literals and two-variable XORs."""
    node, negated = _strip_not(expr)
    if negated or not isinstance(node, And):
        return None
    qubit_of = {name: i for i, name in enumerate(names)}
    uses = {name: 0 for name in names}
    for n in walk(node):
        if isinstance(n, Var):
            uses[n.name] += 1

    prep: list[GateOp] = []
    literals = []
    has_xor = False
    for child in node.children:
        inner, neg = _strip_not(child)
        if isinstance(inner, Var):
            literals.append((qubit_of[inner.name], neg))
            continue
        if not isinstance(inner, Xor):
            return None
        a, neg_a = _strip_not(inner.left)
        b, neg_b = _strip_not(inner.right)
        if not (isinstance(a, Var) and isinstance(b, Var)) or a.name == b.name:
            return None
        # The folded-into operand must not be read by any other literal.
        if uses[b.name] == 1:
            control, target = a, b
        elif uses[a.name] == 1:
            control, target = b, a
        else:
            return None
        has_xor = True
        prep.append(cnot(qubit_of[control.name], qubit_of[target.name]))
        literals.append((qubit_of[target.name], neg ^ neg_a ^ neg_b))
    if not has_xor:
        return None

    merged = _merge_literals(literals)
    if merged is None:
        return Circuit(len(names))
    flips = [x(q) for q, neg in merged if neg]
    ops = prep + flips + [mcz(sorted(q for q, _ in merged))]
    ops += [op.inverse for op in reversed(flips)] + [op.inverse for op in reversed(prep)]
    return Circuit(len(names), ops)


def synthesize_oracle_circuit(expr: BoolExpr) -> Circuit:
    """Gate-level phase oracle; qubits beyond the variables are ancillas."""
    names = variables(expr)
    if len(names) > MAX_VARS:
        raise CapacityError(f"{len(names)} variables exceeds the limit of {MAX_VARS}")
    circuit = _in_place_oracle(expr, names)
    if circuit is not None:
        return circuit
    synth = _Synthesizer(names)
    synth.phase_of(expr)
    return synth.circuit()


def build_oracle(expr: BoolExpr) -> OraclePair:
    return OraclePair(build_diagonal_oracle(expr), synthesize_oracle_circuit(expr))


def diffusion_ops(qubits) -> list[GateOp]:
    qubits = list(qubits)
    hs = [h(q) for q in qubits]
    xs = [x(q) for q in qubits]
    return hs + xs + [mcz(qubits)] + xs + hs


def build_diffusion(num_var_qubits: int) -> Circuit:
    """H, X, MCZ, X, H on every qubit: -H(2|0><0| - I)H, i.e. inversion about the mean."""
    if num_var_qubits < 1:
        raise ConfigurationError("diffusion needs at least one qubit")
    return Circuit(num_var_qubits, diffusion_ops(range(num_var_qubits)))


def build_grover(expr: BoolExpr, iterations: int = 1) -> tuple[GroverPlan, Circuit]:
    if iterations < 1:
        raise SchedulingError(f"iterations must be >= 1, got {iterations}")
    oracle = synthesize_oracle_circuit(expr)
    nv = len(variables(expr))
    m = len(enumerate_solutions(expr))
    if m == 0:
        warnings.warn("rule has no solutions; Grover output stays near uniform", stacklevel=2)
    circuit = Circuit(oracle.num_qubits, [h(q) for q in range(nv)])
    for _ in range(iterations):
        circuit.extend(oracle.ops)
        circuit.extend(diffusion_ops(range(nv)))
    plan = GroverPlan(
        expr=expr,
        num_vars=nv,
        num_qubits=oracle.num_qubits,
        iterations=iterations,
        ancilla_count=oracle.num_qubits - nv,
        num_solutions=m,
    )
    return plan, circuit


def predicted_success(num_vars: int, num_solutions: int, iterations: int) -> float:
    """sin^2((2k+1)·theta) with sin(theta) = sqrt(m/N)."""
    theta = math.asin(math.sqrt(num_solutions / 2**num_vars))
    return math.sin((2 * iterations + 1) * theta) ** 2


def optimal_iterations(num_vars: int, num_solutions: int) -> int:
    if num_solutions < 1:
        raise SchedulingError("cannot schedule a rule with no solutions")
    if num_solutions > 2**num_vars:
        raise SchedulingError(f"{num_solutions} solutions among {2**num_vars} states")
    return max(1, math.floor(math.pi / 4 * math.sqrt(2**num_vars / num_solutions)))


def sample_rule(
    expr: BoolExpr,
    iterations: int = 1,
    shots: int = 4096,
    seed: int = 0,
    noise: NoiseConfig | None = None,
    partitions: int = 1,
) -> qsim.CountsTable:
    """Run the Grover circuit for ``expr``; labels cover variable qubits only.

    With noise enabled the circuit is decomposed to {1-qubit, CNOT} first.
    """
    plan, circuit = build_grover(expr, iterations)
    if noise is not None and noise.enabled:
        circuit = qsim.decompose(circuit)
    return qsim.sample(
        circuit, shots, seed, noise=noise, measure=plan.measured_qubits, partitions=partitions
    )

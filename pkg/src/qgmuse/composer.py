"""Classical half of the composer: turn sampled rule solutions into melodies.

Each step draws one 3-bit label from a sampler (one Grover shot), decodes
it as (LI_t, DC_t, LI_prev) flags, and discards it unless the sampled
LI_prev matches the size of the interval actually generated last time.
Accepted flags bound the size and direction of the next white-note
interval.  Pitches are white-key degrees, 0 = middle C.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import qsim
from .errors import ComposerStalledError, ConfigurationError, TableFormatError
from .qsim import NoiseConfig

LARGE_SPAN = 4
MAX_SPAN_LARGE = 8
MAX_SPAN_SMALL = 3
DC_MODES = ("literal", "strict")

# Variable order puts LI(t), DC(t), LI(t-1) on q0, q1, q2.
EQ25_RULE = "!LI_t & !(DC_t ^ LI_prev) & !LI_prev"

Sampler = Callable[[], str]


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


@dataclass(frozen=True)
class Interval:
    """Signed white-key step between consecutive notes."""

    steps: int

    @property
    def span(self) -> int:
        """White keys covered counting both ends; 0 for a repeated note."""
        return 0 if self.steps == 0 else self.steps + _sign(self.steps)

    @property
    def large(self) -> bool:
        return abs(self.span) >= LARGE_SPAN

    @classmethod
    def from_span(cls, span: int) -> Interval:
        if span in (1, -1):
            raise ValueError("a nonzero interval spans at least two white keys")
        return cls(span - _sign(span))


@dataclass(frozen=True)
class FlagTriple:
    LI_t: int
    DC_t: int
    LI_prev: int


@dataclass(frozen=True)
class StepRecord:
    label: str
    flags: FlagTriple
    retries: int


@dataclass
class Melody:
    pitches: list[int]
    intervals: list[Interval] = field(default_factory=list)
    steps: list[StepRecord] = field(default_factory=list)

    @property
    def spans(self) -> list[int]:
        return [iv.span for iv in self.intervals]

    @classmethod
    def from_spans(cls, spans: Iterable[int], start: int = 0) -> Melody:
        pitches = [start]
        intervals = []
        for span in spans:
            iv = Interval.from_span(span)
            intervals.append(iv)
            pitches.append(pitches[-1] + iv.steps)
        return cls(pitches, intervals)


@dataclass(frozen=True)
class ComposerConfig:
    num_notes: int = 32
    seed: int = 0
    max_retries: int = 64
    dc_mode: str = "literal"
    backend: str = "ideal"  # "ideal", "noisy" or "scripted"
    noise: NoiseConfig = field(default_factory=lambda: qsim.IBMQX4)
    script: tuple[str, ...] = ()

    def __post_init__(self):
        if self.num_notes < 2:
            raise ConfigurationError(f"num_notes must be >= 2, got {self.num_notes}")
        if self.max_retries < 1:
            raise ConfigurationError(f"max_retries must be >= 1, got {self.max_retries}")
        if self.dc_mode not in DC_MODES:
            raise ConfigurationError(f"dc_mode must be one of {DC_MODES}")
        if self.backend not in ("ideal", "noisy", "scripted"):
            raise ConfigurationError(f"unknown backend {self.backend!r}")
        if self.backend == "scripted" and not self.script:
            raise ConfigurationError("scripted backend needs at least one label")


def actual_LI(interval: Interval | None) -> int:
    return int(interval is not None and interval.large)


def actual_DC(prev: Interval, cur: Interval) -> int:
    return int(prev.steps * cur.steps < 0)


def decode_flags(label: str) -> FlagTriple:
    """Label is q2 q1 q0 = LI_prev DC_t LI_t."""
    if len(label) != 3 or set(label) - {"0", "1"}:
        raise ValueError(f"expected a 3-bit label, got {label!r}")
    return FlagTriple(LI_t=int(label[2]), DC_t=int(label[1]), LI_prev=int(label[0]))


def next_interval(
    flags: FlagTriple,
    prev_direction: int,
    rng: np.random.Generator,
    dc_mode: str = "literal",
) -> Interval:
    """Draw the next interval allowed by ``flags``.

    ``prev_direction`` is the sign of the last nonzero interval (0 if none).
    Step magnitudes are uniform on 0..max_span-1, i.e. spans {0, 2..max_span}.
    """
    max_span = MAX_SPAN_LARGE if flags.LI_t else MAX_SPAN_SMALL
    magnitude = int(rng.integers(0, max_span))
    coin = 1 if rng.random() < 0.5 else -1
    if magnitude == 0:
        return Interval(0)
    if prev_direction == 0:
        sign = coin
    elif dc_mode == "strict":
        sign = -prev_direction if flags.DC_t else prev_direction
    else:
        sign = coin if flags.DC_t else prev_direction
    return Interval(sign * magnitude)


def grover_sampler(
    seed: int,
    noise: NoiseConfig | None = None,
    rule: str = EQ25_RULE,
    iterations: int = 1,
) -> Sampler:
    """One Grover shot per call for ``rule``."""
    from . import grover
    from .rules import parse_rule

    plan, circuit = grover.build_grover(parse_rule(rule), iterations)
    rng = np.random.default_rng(seed)
    width = plan.num_vars
    if noise is None or not noise.enabled:
        probs = qsim.marginal(
            qsim.probabilities(qsim.run_circuit(circuit)), circuit.num_qubits, plan.measured_qubits
        )
        cdf = np.cumsum(probs)

        def draw() -> str:
            i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            return format(min(i, len(cdf) - 1), f"0{width}b")

        return draw

    circuit = qsim.decompose(circuit)

    def draw_noisy() -> str:
        shot_seed = int(rng.integers(2**63))
        counts = qsim.sample(circuit, 1, shot_seed, noise=noise, measure=plan.measured_qubits)
        return next(iter(counts.counts))

    return draw_noisy


def scripted_sampler(labels: Sequence[str]) -> Sampler:
    """Replays ``labels`` in order, cycling when exhausted."""
    labels = list(labels)
    if not labels:
        raise ConfigurationError("scripted sampler needs at least one label")
    it = itertools.cycle(labels)
    return lambda: next(it)


def load_script(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        labels = [line.strip() for line in f if line.strip() and not line.startswith("#")]
    for label in labels:
        decode_flags(label)
    return labels


def make_sampler(config: ComposerConfig) -> Sampler:
    if config.backend == "scripted":
        return scripted_sampler(config.script)
    # Sampler randomness is kept apart from interval randomness.
    seed = int(np.random.SeedSequence([config.seed, 1]).generate_state(1, np.uint64)[0])
    return grover_sampler(seed, config.noise if config.backend == "noisy" else None)


def compose(config: ComposerConfig, sampler: Sampler | None = None) -> Melody:
    """Generate ``config.num_notes`` pitches starting on middle C."""
    if sampler is None:
        sampler = make_sampler(config)
    rng = np.random.default_rng(config.seed)
    melody = Melody([0])
    direction = 0
    prev: Interval | None = None
    for step in range(1, config.num_notes):
        want = actual_LI(prev)
        retries = 0
        while True:
            label = sampler()
            flags = decode_flags(label)
            if flags.LI_prev == want:
                break
            retries += 1
            if retries > config.max_retries:
                raise ComposerStalledError(step, retries - 1)
        interval = next_interval(flags, direction, rng, config.dc_mode)
        melody.intervals.append(interval)
        melody.pitches.append(melody.pitches[-1] + interval.steps)
        melody.steps.append(StepRecord(label, flags, retries))
        if interval.steps:
            direction = _sign(interval.steps)
        prev = interval
    return melody


@dataclass
class AdherenceReport:
    """Large intervals (1-based index) classified by what follows them."""

    broken: list[int]
    followed: list[int]
    indeterminate: list[int]
    small_fraction: float


def analyze(intervals: Sequence[Interval]) -> AdherenceReport:
    """Check "a large interval is followed by a change of direction".

    A following unison cannot confirm or break the rule, and neither can a
    large interval at the very end.
    """
    if not intervals:
        raise TableFormatError("no intervals to analyze")
    spans = [iv.span for iv in intervals]
    broken, followed, indeterminate = [], [], []
    for i, span in enumerate(spans):
        if abs(span) < LARGE_SPAN:
            continue
        index = i + 1
        if i + 1 == len(spans) or spans[i + 1] == 0:
            indeterminate.append(index)
        elif _sign(spans[i + 1]) != _sign(span):
            followed.append(index)
        else:
            broken.append(index)
    small = sum(abs(s) <= MAX_SPAN_SMALL for s in spans) / len(spans)
    return AdherenceReport(broken, followed, indeterminate, small)

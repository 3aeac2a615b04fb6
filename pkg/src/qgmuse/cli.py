"""Command-line entry point: ``qgmuse {solve,grover,compose,analyze}``."""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

from . import composer, grover, notation, qsim
from .errors import QgMuseError
from .rules import enumerate_solutions, load_rule, parse_rule, solution_count, variables

DEFAULT_SEED = 0
DEFAULT_SHOTS = 4096


def bundled(name: str) -> Path:
    return Path(str(resources.files("qgmuse") / "data" / name))


def _resolve(path: str) -> Path:
    """Existing paths win; otherwise fall back to a bundled fixture of that name."""
    p = Path(path)
    if p.exists() or not bundled(p.name).exists():
        return p
    return bundled(p.name)


def _load_rule(args):
    if args.rule is not None:
        return parse_rule(args.rule)
    if args.rule_file is not None:
        return load_rule(_resolve(args.rule_file))
    raise QgMuseError("give a rule with --rule or --rule-file")


def _atomic_write(path: str, data: bytes | str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, target)
    except BaseException:
        os.unlink(tmp)
        raise


def _noise(args) -> qsim.NoiseConfig:
    if args.backend == "ideal":
        return qsim.NoiseConfig.ideal()
    return qsim.NoiseConfig(args.fidelity_1q, args.fidelity_2q)


def cmd_solve(args) -> int:
    expr = _load_rule(args)
    table = enumerate_solutions(expr)
    for label in table.labels():
        print(label)
    print(f"count: {len(table)}")
    return 0


def cmd_grover(args) -> int:
    expr = _load_rule(args)
    nv = len(variables(expr))
    if args.iterations == "auto":
        iterations = grover.optimal_iterations(nv, solution_count(expr))
    else:
        iterations = int(args.iterations)
    noise = _noise(args)
    counts = grover.sample_rule(expr, iterations, args.shots, args.seed, noise)
    label, n = counts.most_common()
    print(f"seed: {args.seed}")
    print(f"backend: {counts.backend}")
    print(f"iterations: {iterations}")
    print(f"top: {label} {n / counts.shots:.4f}")
    out_csv = args.out_csv or "grover_histogram.csv"
    _atomic_write(out_csv, notation.write_histogram(counts))
    _atomic_write(str(Path(out_csv).with_suffix(".json")), notation.histogram_record(counts))
    return 0


def cmd_compose(args) -> int:
    script = ()
    backend = args.backend
    if args.sampler_script:
        script = tuple(composer.load_script(_resolve(args.sampler_script)))
        backend = "scripted"
    config = composer.ComposerConfig(
        num_notes=args.notes,
        seed=args.seed,
        max_retries=args.max_retries,
        dc_mode=args.dc_mode,
        backend=backend,
        noise=qsim.NoiseConfig(args.fidelity_1q, args.fidelity_2q),
        script=script,
    )
    melody = composer.compose(config)
    midi = notation.write_midi(melody, tempo_bpm=args.tempo)
    table = notation.write_interval_table(melody)
    print(f"seed: {args.seed}")
    print("step,label,retries")
    for i, rec in enumerate(melody.steps, start=1):
        print(f"{i},{rec.label},{rec.retries}")
    _atomic_write(args.out_midi or "melody.mid", midi)
    _atomic_write(args.out_csv or "melody_intervals.csv", table)
    print(f"notes: {len(melody.pitches)}")
    return 0


def cmd_analyze(args) -> int:
    path = _resolve(args.table)
    intervals = notation.read_interval_table(path.read_text(encoding="utf-8"))
    report = composer.analyze(intervals)

    def fmt(xs):
        return " ".join(map(str, xs)) if xs else "(none)"

    print(f"broken: {fmt(report.broken)} / followed: {fmt(report.followed)}")
    print(f"indeterminate: {fmt(report.indeterminate)}")
    print(f"small fraction: {report.small_fraction:.4f}")
    return 0


def _notes(text: str) -> int:
    n = int(text)
    if n < 2:
        raise argparse.ArgumentTypeError("a melody needs at least 2 notes")
    return n


def _iterations(text: str):
    if text == "auto":
        return text
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("iterations must be >= 1 or 'auto'")
    return k


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgmuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def rule_opts(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("-r", "--rule", help="inline rule, e.g. '!a & (b ^ c)'")
        src.add_argument("--rule-file", help="rule file (bundled names such as eq25.rule work)")

    def sim_opts(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--backend", choices=("ideal", "noisy"), default="ideal")
        p.add_argument("--fidelity-1q", type=float, default=qsim.IBMQX4.fidelity_1q)
        p.add_argument("--fidelity-2q", type=float, default=qsim.IBMQX4.fidelity_2q)

    p = sub.add_parser("solve", help="list all satisfying assignments")
    rule_opts(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("grover", help="sample a rule with Grover search")
    rule_opts(p)
    sim_opts(p)
    p.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    p.add_argument("--iterations", type=_iterations, default=1)
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_grover)

    p = sub.add_parser("compose", help="generate a melody")
    sim_opts(p)
    p.add_argument("--notes", type=_notes, default=32)
    p.add_argument("--dc-mode", choices=composer.DC_MODES, default="literal")
    p.add_argument("--max-retries", type=int, default=64)
    p.add_argument("--sampler-script", help="file of 3-bit labels, one per line")
    p.add_argument("--tempo", type=float, default=120)
    p.add_argument("--out-midi")
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("analyze", help="check large-interval direction changes")
    p.add_argument("table", help="interval CSV (index,span)")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QgMuseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

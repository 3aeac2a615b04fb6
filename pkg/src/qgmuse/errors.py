"""Exception hierarchy shared by all qgmuse modules."""


class QgMuseError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(QgMuseError, ValueError):
    pass


class CircuitError(QgMuseError, ValueError):
    pass


class MustDecomposeError(CircuitError):
    """Noise injection needs a circuit in the {1-qubit, CNOT} basis."""


class UnsupportedGateError(CircuitError):
    pass


class RuleSyntaxError(QgMuseError, ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class EvaluationError(QgMuseError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class CapacityError(QgMuseError, ValueError):
    pass


class SynthesisError(QgMuseError, ValueError):
    pass


class SchedulingError(QgMuseError, ValueError):
    pass


class ComposerStalledError(QgMuseError, RuntimeError):
    def __init__(self, step: int, retries: int):
        super().__init__(f"composer stalled at step {step} after {retries} retries")
        self.step = step
        self.retries = retries


class MidiRangeError(QgMuseError, ValueError):
    pass


class TableFormatError(QgMuseError, ValueError):
    pass

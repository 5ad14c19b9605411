"""Domain errors. Every error carries a human-readable detail and the
process exit code the CLI reports for it."""


class BreathSimError(Exception):
    exit_code = 2

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InvalidInputError(BreathSimError):
    pass


class InvalidBandError(BreathSimError):
    pass


class InsufficientDataError(BreathSimError):
    pass


class DataFormatError(BreathSimError):
    def __init__(self, detail: str, line: int | None = None):
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)
        self.line = line


class DegenerateInputError(BreathSimError):
    def __init__(self, detail: str, deficit: int):
        super().__init__(detail)
        self.deficit = deficit


class ConfigurationError(BreathSimError):
    pass


class SingularStateError(BreathSimError):
    def __init__(self, state: int):
        super().__init__(f"state {state} has zero exit rate")
        self.state = state


class ReducibilityError(BreathSimError):
    def __init__(self, classes: list[list[int]]):
        super().__init__(f"generator is reducible, communicating classes: {classes}")
        self.classes = classes


class NoTransitionsError(BreathSimError):
    pass


class NotApplicableError(BreathSimError):
    pass


class MustStripError(BreathSimError):
    pass


class EmptyPlanError(BreathSimError):
    pass


class ConsistencyError(BreathSimError):
    pass


class InvalidRegionError(BreathSimError):
    pass


class InvalidCutoffError(BreathSimError):
    pass


class UnsupportedStateError(BreathSimError):
    pass


class InfiniteDivergenceError(BreathSimError):
    pass


class AlignmentError(BreathSimError):
    pass


class UndefinedAxisError(BreathSimError):
    pass

"""Exception hierarchy shared by all modules."""


class FPKLabError(Exception):
    """Base class for every error raised by fpklab."""


class InvalidArgument(FPKLabError, ValueError):
    pass


class Unsupported(FPKLabError):
    """Operation needs a grid structure the input does not have."""


class InvariantViolation(FPKLabError):
    """A constructed object failed one of its declared invariants."""


class NonNormalizableDrift(FPKLabError):
    pass


class DiscretizationFailure(FPKLabError):
    pass


class NotInOrliczClass(FPKLabError):
    pass


class DegenerateInput(FPKLabError):
    pass


class Inapplicable(FPKLabError):
    """Hypotheses of a check are not met; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InstanceTooLarge(FPKLabError):
    pass


class SearchFailure(FPKLabError):
    pass


class ConfigError(FPKLabError):
    pass

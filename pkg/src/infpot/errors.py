"""Exception types shared across the package."""


class InfpotError(Exception):
    """Base class for all package errors."""


class InputError(InfpotError):
    """Invalid argument: unknown node id, bad parameter, violated precondition."""


class DomainError(InfpotError):
    """Operation undefined on the given data (e.g. infinite distances inside a region)."""


class ConfigError(InputError):
    """Invalid configuration document. Carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class SlopeInadmissibleError(InputError):
    """Initial slope b does not satisfy the strict admissibility bound
    b > sqrt(max(-G_*, 0)) on the working value range."""

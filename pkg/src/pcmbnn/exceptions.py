class DomainError(ValueError):
    """A value lies outside the physical range it is defined on."""


class InfeasibleError(ValueError):
    """No conductance meets the requested noise budget.

    ``achievable`` holds the (min, max) noise std reachable over the range.
    """

    def __init__(self, message, achievable=None):
        super().__init__(message)
        self.achievable = achievable


class StaleRegisterError(RuntimeError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class ConfigError(ValueError):
    """Invalid experiment configuration. ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path

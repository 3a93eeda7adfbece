"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value. ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class UnstableSystemError(ValueError):
    """Raised when an operation requires a stable loop and gets an unstable one."""


class SimulationError(RuntimeError):
    """Integration produced a non-finite state.

    The partially filled trace (rows up to, but excluding, the failing step)
    is attached as ``trace`` so callers can still inspect it.
    """

    def __init__(self, step_index, message, trace=None):
        self.step_index = step_index
        self.trace = trace
        super().__init__(f"step {step_index}: {message}")

# src/yamabe_flow/errors.py


class YamabeFlowError(Exception):
    """Base class for every error raised by yamabe_flow."""


class DomainError(YamabeFlowError, ValueError):
    pass


class InvalidFieldError(YamabeFlowError, ValueError):
    pass


class ConfigurationError(YamabeFlowError, ValueError):
    pass


class StepFailure(YamabeFlowError, RuntimeError):
    """A time step produced a non-positive conformal factor."""

    def __init__(self, node: int, radius: float, value: float, t: float):
        self.node = node
        self.radius = radius
        self.value = value
        self.t = t
        super().__init__(
            f"non-positive conformal factor {value:.6g} at node {node} "
            f"(r = {radius:.6g}) while stepping to t = {t:.6g}"
        )


class SingularSystemError(YamabeFlowError, RuntimeError):
    pass


class LevelFailure(YamabeFlowError, RuntimeError):
    def __init__(self, level: int, radius: float, cause: Exception):
        self.level = level
        self.radius = radius
        super().__init__(f"exhaustion level {level} (ell = {radius:g}) failed: {cause}")


class ExportError(YamabeFlowError, OSError):
    def __init__(self, path, cause: Exception):
        self.path = path
        super().__init__(f"could not write or read {path}: {cause}")

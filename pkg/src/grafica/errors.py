"""Exception types shared across the package."""


class GraficaError(Exception):
    """Base class for all errors raised by grafica."""


class StructuralError(GraficaError, ValueError):
    """Input violates a shape, symmetry or range precondition."""


class DegeneratePartitionError(GraficaError, ValueError):
    """A partition has no usable inter-cluster or volume structure."""


class ConfigError(GraficaError, ValueError):
    """A run configuration is inconsistent with its inputs."""


class DatasetParseError(GraficaError, ValueError):
    """A dataset file could not be parsed.

    Parameters
    ----------
    path : str
        File being parsed.
    line : int or None
        1-based line number of the offending line, when known.
    message : str
        What went wrong.
    """

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        loc = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{loc}: {message}")

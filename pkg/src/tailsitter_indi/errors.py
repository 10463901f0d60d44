"""Exception types shared across the package."""


class SensorCorruptError(ValueError):
    """A non-finite sample reached a filter; its state was left untouched."""


class NumericalFault(RuntimeError):
    """A non-finite value appeared inside the control or simulation loop."""


class ConfigError(ValueError):
    """A configuration file failed to parse or validate."""

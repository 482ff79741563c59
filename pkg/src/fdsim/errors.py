"""Error types shared across the simulator."""


class ConfigError(Exception):
    """Bad or inconsistent configuration (CLI exit code 1)."""


class InvariantError(Exception):
    """A runtime contract was violated; the run cannot be trusted (CLI exit code 2)."""

"""Exception types shared across modules; the CLI maps them to exit codes."""


class HierlabError(Exception):
    pass


class CapacityError(HierlabError):
    """Requested size exceeds a configured or hard capacity."""


class ContractViolation(HierlabError):
    """An input broke a documented precondition (equivariance, ball constraint...)."""


class IntegratorAccuracyError(HierlabError):
    """Mass drift of the fixed-step integrator exceeded its guard."""


class ConfigError(HierlabError):
    """Malformed or invalid scenario configuration."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)

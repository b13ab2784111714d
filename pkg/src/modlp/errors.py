"""Exception hierarchy shared by all modules and mapped to CLI exit codes."""


class ModlpError(Exception):
    """Base class. ``exit_code`` is what the CLI returns when this escapes."""

    exit_code = 3
    kind = "internal"


class InputError(ModlpError, ValueError):
    """Malformed or out-of-domain input (shape, parameter, missing file)."""

    exit_code = 2
    kind = "input"


class ShapeError(InputError):
    kind = "shape"


class ParameterError(InputError):
    kind = "parameter"


class DegenerateSubspaceError(InputError):
    kind = "degenerate-subspace"


class NotStandardError(InputError):
    kind = "not-standard"


class DominationError(InputError):
    kind = "domination"


class NotPositiveError(InputError):
    kind = "not-positive"


class ConfigError(InputError):
    kind = "config"


class ContractViolation(ModlpError, RuntimeError):
    """A postcondition that should hold by construction failed numerically."""

    exit_code = 3
    kind = "contract"

"""Error taxonomy shared across the package.

Exit-code mapping used by the CLI: ContractViolation -> 1, configuration
problems (ConfigurationError and subclasses) -> 2.
"""


class ContractViolation(ValueError):
    """An operation was called with inputs that break its stated contract."""


class ConfigurationError(RuntimeError):
    """Bad or unresolvable configuration: files, checkpoints, flag combinations."""


class ResourceError(ConfigurationError):
    """A required resource (font, background pool, lexicon, checkpoint) is missing."""


class NumericalGuardError(RuntimeError):
    """A numeric quantity that must stay finite did not."""

"""Exception types shared across modules (mapped to CLI exit codes)."""


class HypothesisFailed(RuntimeError):
    """A measured hypothesis of a theorem or lemma does not hold (exit code 3)."""

    def __init__(self, message, item=None):
        super().__init__(message)
        self.item = item


class BudgetExceeded(RuntimeError):
    """An inequality check exceeded its configured constant budget (exit code 2)."""


class ConfigError(ValueError):
    """Malformed experiment configuration (exit code 1)."""

    def __init__(self, message, path=""):
        super().__init__("%s: %s" % (path, message) if path else message)
        self.path = path

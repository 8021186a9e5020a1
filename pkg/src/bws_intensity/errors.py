"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ToolkitError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ValidationError(ToolkitError):
    """Input violated a documented invariant."""


class ConfigurationError(ToolkitError):
    """A configuration value is out of its permitted range."""


class ResourceError(ToolkitError):
    """A requested lexicon/embedding resource is not loaded."""


class InfeasibleDesignError(ToolkitError):
    """The requested tuple design cannot exist for this item count."""


class DesignSearchError(ToolkitError):
    """Design search exhausted its restart budget."""

    def __init__(self, message, seed=None, attempts=None):
        super().__init__(message)
        self.seed = seed
        self.attempts = attempts


class RejectedAnnotatorError(ToolkitError):
    """The annotator failed the gold-question accuracy gate."""


class DegenerateInputError(ToolkitError):
    """A statistic is undefined on this input (constant vector, no nonzero
    differences, too few points)."""


class TrainingError(ToolkitError):
    """Regression training received degenerate input."""

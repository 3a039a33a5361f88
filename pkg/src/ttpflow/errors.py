"""Exception types shared across the package, plus the process exit codes the CLI maps them to."""

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_DATA = 4


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class FlowParseError(ToolkitError):
    """A flow file or manifest line could not be parsed or failed validation.

    Carries the 1-based line number and the offending field name when known.
    """

    exit_code = EXIT_PARSE

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)
        self.message = message


class ConfigError(ToolkitError):
    """Invalid configuration value, unknown configuration key, or inconsistent run setup."""

    exit_code = EXIT_CONFIG


class DataError(ToolkitError):
    """Input data violates a contract that is not a per-line parse problem."""

    exit_code = EXIT_DATA


class MissingLabelError(DataError):
    """A flow references a sample hash absent from the label manifest."""

    def __init__(self, sample_hash: str):
        self.sample_hash = sample_hash
        super().__init__(f"no label for sample hash '{sample_hash}'")


class SingleClassError(DataError):
    """Training data for a technique contains only one class.

    Callers treat this as the signal to fall back to the rule-only
    (always-malicious) classifier for that technique.
    """

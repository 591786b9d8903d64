"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: usage errors are argparse's domain
(exit 1), ValidationError maps to 2, ResourceLimitError to 3.
"""


class ValidationError(ValueError):
    """Invalid argument or malformed input data."""


class ResourceLimitError(RuntimeError):
    """A size guard tripped (state-space or path-count blow-up)."""


class EmptyBallError(ValidationError):
    """A target ball received no orbit mass; the target is unusable."""


class EscapedBasinError(RuntimeError):
    """An orbit left the configured escape radius."""

    def __init__(self, step: int):
        super().__init__(f"orbit escaped at step {step}")
        self.step = step

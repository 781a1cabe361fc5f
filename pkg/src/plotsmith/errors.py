"""Exception types shared across the package.

Every error that can be traced to a location in a model document carries a
``path`` attribute (dotted keys, ``[i]`` for list indices) so CLI and service
layers can report it verbatim.
"""

from __future__ import annotations


class PlotsmithError(Exception):
    """Base class for all package errors."""


class ModelFormatError(PlotsmithError):
    """A model document is structurally invalid (wrong type, unknown key,
    missing field, out-of-range reference)."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class ModelValidationError(PlotsmithError):
    """A structurally well-formed model failed semantic validation and the
    caller asked for a hard failure."""

    def __init__(self, findings):
        self.findings = list(findings)
        lines = "; ".join(str(f) for f in self.findings)
        super().__init__(f"model validation failed: {lines}")


class StateSpaceCapError(PlotsmithError):
    """The dense joint state space would exceed the configured cap."""

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(
            f"joint state space has {size} states, exceeding the cap of {cap} "
            f"(raise PLOTSMITH_STATE_CAP to override)"
        )


class BlockScalingError(PlotsmithError):
    """Task blocking could not redistribute probability mass."""


class InterventionError(PlotsmithError):
    """An intervention payload references things the model does not have, or
    is otherwise unusable."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)

"""Typed errors raised across the package.

Every error that stems from bad user input derives from
:class:`ValidationError`, which the command-line front end maps to exit
code 2.  Anything else escaping a command is treated as an internal failure.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Input failed a schema or invariant check."""


class SchemaError(ValidationError):
    """A file is missing a required column or field, or has a malformed one."""


class NonpositiveWeight(ValidationError):
    """A design weight or relative weight was zero, negative or not finite."""

    def __init__(self, row_id: str, detail: str = "") -> None:
        self.row_id = row_id
        msg = f"NonpositiveWeight({row_id})"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class VisibilityExceedsTies(ValidationError):
    """A hidden respondent reported being visible to more alters than they know."""

    def __init__(self, row_id: str, group_id: str, ties: int, visible: int) -> None:
        self.row_id = row_id
        self.group_id = group_id
        super().__init__(
            f"VisibilityExceedsTies({row_id}): group {group_id!r} has "
            f"v={visible} > y={ties}"
        )


class EmptySample(ValidationError):
    """A survey has no respondents."""


class UnknownGroup(ValidationError):
    """A survey refers to a probe group that is not in the registry."""


class DegenerateDenominator(ValidationError):
    """A ratio would divide by zero."""


class DegenerateVisibility(DegenerateDenominator):
    """The estimated mean visibility is zero, so no size estimate exists."""


class SingletonStratum(ValidationError):
    """A stratum has a single sampled PSU, which the rescaled bootstrap cannot use."""

    def __init__(self, stratum: str) -> None:
        self.stratum = stratum
        super().__init__(f"SingletonStratum({stratum}): rescaled bootstrap needs n_h >= 2")


class InfeasibleConfiguration(ValidationError):
    """Simulation settings cannot be realised (for example, membership counts clash)."""

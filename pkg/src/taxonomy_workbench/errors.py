"""Exception types shared across the workbench.

Every error raised by this package derives from WorkbenchError, so callers
can catch one base class at a process boundary (CLI, HTTP service) and map
subtypes to exit codes or status codes.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class InvalidLabelError(WorkbenchError):
    """A type label is empty or contains reserved path syntax."""


class PathNotFoundError(WorkbenchError):
    """A path does not resolve to a node.

    Carries the longest prefix that did resolve so error messages can say
    where resolution stopped.
    """

    def __init__(self, path: object, resolved_prefix: tuple[str, ...] = ()) -> None:
        self.path = path
        self.resolved_prefix = tuple(resolved_prefix)
        shown = " / ".join(self.resolved_prefix) if self.resolved_prefix else "(none)"
        super().__init__(f"path not found: {path}; longest resolvable prefix: {shown}")


class DuplicateSiblingError(WorkbenchError):
    """Two children of the same node would carry the same label."""

    def __init__(self, parent_label: str, label: str) -> None:
        self.parent_label = parent_label
        self.label = label
        super().__init__(f"duplicate sibling label {label!r} under {parent_label!r}")


class RootLabelMismatchError(WorkbenchError):
    """A replacement branch is rooted at a different label than its target."""


class BudgetTooSmallError(WorkbenchError):
    """A context budget cannot even cover the focus path."""


class SchemaError(WorkbenchError):
    """A document or model response violates the expected JSON schema."""

    def __init__(self, message: str, at: str = "$") -> None:
        self.at = at
        super().__init__(f"{message} (at {at})")


class NoJsonFoundError(WorkbenchError):
    """A model response contains no parseable JSON object."""


class ResponseRootMismatchError(WorkbenchError):
    """A parsed branch is rooted at an unexpected label."""


class TemplateError(WorkbenchError):
    """A prompt template references a placeholder missing from its context."""


class BackendError(WorkbenchError):
    """Base class for chat backend failures."""


class FixtureMissError(BackendError):
    """A scripted backend in strict mode received an unmatched request."""


class NetworkError(BackendError):
    """The chat endpoint could not be reached."""


class BackendTimeoutError(BackendError):
    """The chat endpoint did not answer in time."""


class BackendStatusError(BackendError):
    """The chat endpoint answered with a non-success status."""

    def __init__(self, message: str, status_code: int) -> None:
        self.status_code = status_code
        super().__init__(message)


class ScorerContractError(WorkbenchError):
    """A node scorer returned scores that do not cover its candidates."""


class ProposalStateError(WorkbenchError):
    """A decision was attempted on a proposal that is no longer pending."""


class StaleProposalError(WorkbenchError):
    """A proposal's target subtree changed after it was created.

    Carries the proposal marked superseded so callers can record it.
    """

    def __init__(self, message: str, proposal: object | None = None) -> None:
        self.proposal = proposal
        super().__init__(message)


class BlockedProposalError(WorkbenchError):
    """An accept was attempted on a proposal with blocking diagnostics."""


class RuleError(WorkbenchError):
    """A combination rule is malformed or cannot be expanded."""


class ConfigError(WorkbenchError):
    """A configuration file is missing, unreadable, or malformed."""

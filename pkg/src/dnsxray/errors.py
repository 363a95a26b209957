"""Exception types shared across the toolkit.

Every error the command line surfaces derives from :class:`ToolError`;
``kind`` feeds the machine-parsable ``error: <kind>: <detail>`` line.
"""


class ToolError(Exception):

    kind = "internal"

    def __init__(self, detail: str = ""):
        super().__init__(detail)
        self.detail = detail


class FileUnreadable(ToolError):
    kind = "file-unreadable"


class FileUnwritable(ToolError):
    kind = "file-unwritable"


class NotAPcap(ToolError):
    kind = "not-a-pcap"


class LineParseError(ToolError):
    """A record line that could not be turned into an observation."""

    kind = "line-parse"

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class ObservationOutOfWindow(ToolError):
    kind = "out-of-window"


class SingleLabelDomain(ToolError):
    kind = "single-label-domain"


class UnknownFeature(ToolError):
    kind = "unknown-feature"


class UnknownDomainTarget(ToolError):
    kind = "unknown-domain-target"


class ConfigInvalid(ToolError):
    kind = "config-invalid"


class SingleClassDataset(ToolError):
    kind = "single-class-dataset"


class KTooLarge(ToolError):
    kind = "k-too-large"


class DimensionMismatch(ToolError):
    kind = "dimension-mismatch"


class FoldTooSmall(ToolError):
    kind = "fold-too-small"


class BudgetTooSmall(ToolError):
    kind = "budget-too-small"


class TooManyFeatures(ToolError):
    kind = "too-many-features"


class OutputExists(ToolError):
    kind = "output-exists"

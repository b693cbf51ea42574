"""Exception and warning types shared across the package."""


class ModetreeError(ValueError):
    """Base class for domain-specific errors."""


class DomainError(ModetreeError):
    """An argument lies outside the mathematically valid range."""


class UndefinedStatisticError(ModetreeError):
    """A correlation statistic is undefined for this field (e.g. vacuum)."""


class DivisionDomainError(ModetreeError):
    """A required no-click probability is zero, so the ratio is undefined."""


class EmptyTallyError(ModetreeError):
    """A click tally with zero pulses cannot be turned into estimates."""


class ZeroSinglesError(ModetreeError):
    """Some detector never clicked, so single-click normalization fails."""


class AllFitsFailedError(ModetreeError):
    """Every candidate model family failed to fit."""


class TruncationWarning(RuntimeWarning):
    """Photon-number truncation dropped more probability mass than allowed."""

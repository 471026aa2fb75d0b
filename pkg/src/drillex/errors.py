"""Exception types shared across the engine."""

from __future__ import annotations


class DrillexError(Exception):
    """Base class for all engine errors."""


class SchemaError(DrillexError):
    """Invalid schema declaration or dataset/schema mismatch."""


class AtLeafLevel(DrillexError):
    """Drill-down requested past the most specific attribute."""


class UnknownHierarchy(DrillexError):
    pass


class UnknownAttribute(DrillexError):
    pass


class UnknownGroup(DrillexError):
    pass


class EmptyDomain(DrillexError):
    """A filtered attribute has no remaining values."""


class StaleAggs(DrillexError):
    """Aggregates do not match the store they are being updated against."""


class NoGroups(DrillexError):
    """A feature value has no groups to derive a statistic from."""


class NonFinite(DrillexError):
    """A custom feature produced NaN or infinity."""


class LengthMismatch(DrillexError):
    pass


class ShapeMismatch(DrillexError):
    pass


class BudgetExceeded(DrillexError):
    """Dense materialization would exceed the configured cell budget."""


class DegenerateDesign(DrillexError):
    """Normal equations are singular even after ridge regularization."""


class SingularSigma(DrillexError):
    """Random-effect covariance is singular after ridge regularization."""


class AllEmpty(DrillexError):
    """Statistic combination over bundles with zero total count."""


class NoCandidates(DrillexError):
    """Every hierarchy is already at its most specific attribute."""


class ParseError(DrillexError):
    pass


class MissingColumn(DrillexError):
    pass

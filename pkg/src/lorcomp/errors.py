"""Exception hierarchy.

Every error raised by the library derives from :class:`LorcompError` so
callers (the CLI in particular) can map them to exit code 2 in one place.
Mathematical *violations* are never raised; they are report content.
"""

from __future__ import annotations


class LorcompError(Exception):
    """Base class for all library errors."""


class ChartDomainError(LorcompError, ValueError):
    """A coordinate lies outside the active chart (or default patch)."""


class NotTimelikeRelated(LorcompError, ValueError):
    """An operation needed two timelike related points."""


class ExceedsModelDiameter(LorcompError, ValueError):
    """A length reached the finite diameter D_K of the model space."""


class UnrealizableTriangle(LorcompError, ValueError):
    """Side lengths violate size bounds or the reverse triangle inequality."""


class CyclicOrder(LorcompError, ValueError):
    """The causal relation contains a cycle."""


class RegionEmpty(LorcompError, ValueError):
    """A sprinkling region has zero volume or lies outside the chart."""


class DensityOverflow(LorcompError, ValueError):
    """A sprinkle would exceed the point-count cap."""


class UnknownFixture(LorcompError, KeyError):
    pass


class UnknownScenario(LorcompError, KeyError):
    pass


class PairOffTriangle(LorcompError, ValueError):
    """A side point refers to a side the triangle does not have."""


class InsufficientSamples(LorcompError, ValueError):
    pass


class AngleUndefined(LorcompError, ValueError):
    """No admissible parameter pairs form timelike triangles with the vertex."""


class NonConvergent(LorcompError, ArithmeticError):
    """Angle extrapolation oscillates above tolerance.

    The partial measurement is attached as ``result`` so it can be reported.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class FormatError(LorcompError, ValueError):
    """Malformed ``lorcomp-cset`` / config input."""

"""Exception hierarchy.

Every error carries a stable symbolic ``code`` and the process exit code the
CLI maps it to.  Exit codes 2-5 and 64 are fixed interface contracts; the
remaining codes are allocated from 65 upward, one per error type.
"""

from __future__ import annotations


class SlicylError(Exception):
    """Base class for all package errors."""

    code = "E_INTERNAL"
    exit_code = 70


class EmptyFileError(SlicylError):
    code = "E_EMPTY_FILE"
    exit_code = 65


class TruncatedFileError(SlicylError):
    code = "E_TRUNCATED"
    exit_code = 66


class StlParseError(SlicylError):
    code = "E_PARSE"
    exit_code = 67


class NonManifoldError(SlicylError):
    """Mesh failed 2-manifold validation; slicing refuses it unless forced."""

    code = "E_NON_MANIFOLD"
    exit_code = 2

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ZeroAxisError(SlicylError):
    code = "E_ZERO_AXIS"
    exit_code = 68


class DecollideError(SlicylError):
    code = "E_DECOLLIDE_FAIL"
    exit_code = 69


class NoLayersError(SlicylError):
    code = "E_NO_LAYERS"
    exit_code = 71


class AxisCrossingFacetError(SlicylError):
    """A facet's yz-projection contains the origin (no axial void there)."""

    code = "E_AXIS_CROSSING_FACET"
    exit_code = 3

    def __init__(self, message, facet_ids=()):
        super().__init__(message)
        self.facet_ids = tuple(facet_ids)


class ArcOracleError(SlicylError):
    """An emitted segment's on-cylinder arc midpoint fell outside its facet."""

    code = "E_ARC_ORACLE"
    exit_code = 72


class DegreeError(SlicylError):
    """An intersection point has adjacency degree != 2."""

    code = "E_DEGREE"
    exit_code = 4


class OpenChainError(SlicylError):
    code = "E_OPEN_CHAIN"
    exit_code = 4


class AmbiguousWindingError(SlicylError):
    """A contour step spans at least a half-turn and cannot be wrapped."""

    code = "E_AMBIGUOUS_WINDING"
    exit_code = 4


class OddTypeIIError(SlicylError):
    code = "E_ODD_TYPE_II"
    exit_code = 4


class DegeneratePlaneError(SlicylError):
    """Facet plane contains the x-axis; the arc parameterization is undefined."""

    code = "E_DEGENERATE_PLANE"
    exit_code = 73


class ParamError(SlicylError):
    """Invalid parameters to a mesh generator."""

    code = "E_PARAM"
    exit_code = 74


class InteriorPassError(SlicylError):
    """Interior-pass warnings escalated to an error under --strict."""

    code = "E_INTERIOR_PASS"
    exit_code = 5


USAGE_EXIT = 64

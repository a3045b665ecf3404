"""Exception types raised across the package.

Every error that callers are expected to catch derives from MlggmError.
Names follow the operation contracts: validation errors for graph
construction, ingest errors for data files, and runtime errors for the
sampler and selection machinery.
"""


class MlggmError(Exception):
    """Base class for all package errors."""


# graph validation

class GraphValidationError(MlggmError):
    """A chain-graph specification violates a structural invariant."""


class LayerOverlapError(GraphValidationError):
    pass


class LayerCoverageError(GraphValidationError):
    pass


class BackwardDirectedEdgeError(GraphValidationError):
    pass


class CrossLayerUndirectedEdgeError(GraphValidationError):
    pass


class LabelOrderViolationError(GraphValidationError):
    pass


class IndexOutOfRangeError(MlggmError):
    pass


# configuration and data ingest

class ConfigInvalidError(MlggmError):
    pass


class MissingColumnInLayerMapError(MlggmError):
    pass


class ConstantColumnError(MlggmError):
    pass


class MissingValueError(MlggmError):
    pass


class NonNumericCellError(MlggmError):
    pass


# numerical machinery

class FactorizationFailureError(MlggmError):
    pass


class DimensionMismatchError(MlggmError):
    pass


class NumericalUnderflowError(MlggmError):
    pass


class DegenerateColumnError(MlggmError):
    pass


# sampler and posterior summaries

class EmptyTraceError(MlggmError):
    pass


class StructureInconsistentError(MlggmError):
    pass


class EmptySelectionError(MlggmError):
    pass


class EdgeOutsideUniverseError(MlggmError):
    pass


class DegenerateTruthError(MlggmError):
    pass

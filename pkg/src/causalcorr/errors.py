"""Exception types shared across the package."""


class CausalCorrError(Exception):
    """Base class for all errors raised by this package."""


class CycleError(CausalCorrError):
    """A directed cycle was found where a DAG is required."""


class UnknownNode(CausalCorrError):
    """A node id does not belong to the graph."""


class NodeMismatch(CausalCorrError):
    """Two graphs were expected to share the same node set."""


class SizeLimitExceeded(CausalCorrError):
    """A state space or enumeration exceeded the configured guard."""


class UnknownVariable(CausalCorrError):
    """A variable id does not belong to the distribution."""


class OverlappingSets(CausalCorrError):
    """Target and given variable sets must be disjoint."""


class VariableCollision(CausalCorrError):
    """Two distributions share a variable id where disjointness is required."""


class VariableMismatch(CausalCorrError):
    """Two distributions must be over identical variable lists."""


class BadEpsilon(CausalCorrError):
    """Error budget outside [0, 1]."""


class ShapeMismatch(CausalCorrError):
    """Input data does not have the expected variables, sizes or dimensions."""


class InvalidModel(CausalCorrError):
    """A model failed validation where a valid one is required."""


class NotAncestral(CausalCorrError):
    """The node set is not equal to its own causal past."""


class WouldCreateCycle(CausalCorrError):
    """Adding the requested edge would create a directed cycle."""


class MissingRelayPath(CausalCorrError):
    """The relay node does not provide the required two-step path."""


class NotNoSignalling(CausalCorrError):
    """Local-polytope membership is only defined for no-signalling inputs."""


class IncompletePOVM(CausalCorrError):
    """POVM effects do not sum to the identity."""


class NegativeProbability(CausalCorrError):
    """A contraction produced a probability below the negativity tolerance."""


class SchemaError(CausalCorrError):
    """JSON input does not match the documented schema (unknown or missing fields)."""


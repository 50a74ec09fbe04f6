"""Classical and quantum hidden-variable models on finite causal structures.

Define a DAG of events with finite outcome alphabets, evaluate classical
gate models, quantum instrument models, and hidden Bayesian networks on it,
and test observed joint distributions for correlation, no-signalling, and
local-polytope membership.
"""

__version__ = "0.1.0"

from .graph import (
    CausalGraph,
    Edge,
    causal_past,
    maximal_disjoint_past_pairs,
    poset_equal,
    topological_order,
    transitive_closure,
)
from .dist import (
    CoarseGraining,
    JointDistribution,
    conditional,
    factor_coarse_graining,
    marginal,
    product,
    tv_distance,
)
from .correlation import CorrelationVerdict, is_correlation
from .classical import (
    ClassicalModel,
    Gate,
    evaluate as evaluate_classical,
    lift_trivial_edge,
    push_back_determinism,
    reroute_transitive_edge,
)
from .quantum import Instrument, QuantumModel, decohere_embed
from .quantum import evaluate as evaluate_quantum
from .hbn import HiddenBayesNet, from_classical, to_classical
from .hbn import evaluate as evaluate_hbn
from .bell import (
    BellScenario,
    LocalityVerdict,
    check_free_will_no_signalling,
    chsh_value,
    classical_bell_model,
    local_membership,
    make_bell_graph,
    quantum_bell_model,
)

__all__ = [
    "BellScenario",
    "CausalGraph",
    "ClassicalModel",
    "CoarseGraining",
    "CorrelationVerdict",
    "Edge",
    "Gate",
    "HiddenBayesNet",
    "Instrument",
    "JointDistribution",
    "LocalityVerdict",
    "QuantumModel",
    "causal_past",
    "check_free_will_no_signalling",
    "chsh_value",
    "classical_bell_model",
    "conditional",
    "decohere_embed",
    "evaluate_classical",
    "evaluate_hbn",
    "evaluate_quantum",
    "factor_coarse_graining",
    "from_classical",
    "is_correlation",
    "lift_trivial_edge",
    "local_membership",
    "make_bell_graph",
    "marginal",
    "maximal_disjoint_past_pairs",
    "poset_equal",
    "product",
    "push_back_determinism",
    "quantum_bell_model",
    "reroute_transitive_edge",
    "to_classical",
    "topological_order",
    "transitive_closure",
    "tv_distance",
]

"""Integer flow rewriting on square, planar, and hypercubic cell complexes.

Flows live on edges; rerouting a unit of flow around a face is the one
rewrite step.  The equivalent face picture assigns a circulation count
to every face and moves single chips between neighbors.  This package
simulates both pictures, converts between them, enumerates terminal
states, and checks the closed-form pyramid that hole pulses settle to.
"""

from .analysis import (
    AuditResult,
    CriterionResult,
    DiamondViolation,
    TerminalSet,
    audit_trajectory,
    check_diamond,
    enumerate_terminals,
    nontermination_criterion,
    predict_pyramid,
)
from .complexes import (
    GridComplex,
    NdGridComplex,
    PlanarComplex,
    dump_complex,
    finite_grid_patch,
    load_complex,
    theta_complex,
    with_distinguished,
)
from .engine import (
    MONITOR_NAMES,
    STRATEGY_NAMES,
    Rules,
    RunReport,
    Strategy,
    apply_move,
    legal_moves,
    run,
)
from .errors import (
    FlowFireError,
    IllegalMove,
    InconsistentIntegration,
    InvalidComplex,
    MissingMonitor,
    NotConservative,
    RepresentationMismatch,
    SupportOutsideWindow,
    UnknownEdge,
    UnknownFace,
    Unreachable,
    ValueOverflow,
)
from .flow import (
    EdgeFlow,
    FaceRep,
    as_edge_flow,
    as_face_rep,
    edges_to_faces,
    faces_to_edges,
    imbalance,
    imbalances,
    is_conservative,
    load_config,
    phi,
    psi,
)

__version__ = "0.1.0"

__all__ = [
    "AuditResult",
    "CriterionResult",
    "DiamondViolation",
    "EdgeFlow",
    "FaceRep",
    "FlowFireError",
    "GridComplex",
    "IllegalMove",
    "InconsistentIntegration",
    "InvalidComplex",
    "MONITOR_NAMES",
    "MissingMonitor",
    "NdGridComplex",
    "NotConservative",
    "PlanarComplex",
    "RepresentationMismatch",
    "Rules",
    "RunReport",
    "STRATEGY_NAMES",
    "Strategy",
    "SupportOutsideWindow",
    "TerminalSet",
    "UnknownEdge",
    "UnknownFace",
    "Unreachable",
    "ValueOverflow",
    "apply_move",
    "as_edge_flow",
    "as_face_rep",
    "audit_trajectory",
    "check_diamond",
    "dump_complex",
    "edges_to_faces",
    "enumerate_terminals",
    "faces_to_edges",
    "finite_grid_patch",
    "imbalance",
    "imbalances",
    "is_conservative",
    "legal_moves",
    "load_complex",
    "load_config",
    "nontermination_criterion",
    "phi",
    "predict_pyramid",
    "psi",
    "run",
    "theta_complex",
    "with_distinguished",
]

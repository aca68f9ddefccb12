"""Graph-sparse static state-feedback synthesis via clique-based LMI relaxations.

Typical flow: describe the interconnection (:mod:`~sparsegain.graphs`), pick
a relaxation family and objective (:mod:`~sparsegain.synthesis`), and get
back a gain whose sparsity, stability, and disturbance attenuation have been
independently re-verified (:mod:`~sparsegain.analysis`). The lifted algebra
behind the clique families lives in :mod:`~sparsegain.lifting`, the SDP
plumbing in :mod:`~sparsegain.conic`, and the randomized comparison protocol
in :mod:`~sparsegain.benchmark`.
"""

from .graphs import (
    CliqueCover,
    Graph,
    UncoveredNodeError,
    cover_represents_graph,
    disk_graph,
    is_chordal,
    maximal_cliques,
    membership_counts,
)
from .lifting import (
    BlockStructure,
    DilatedPlant,
    LiftedBasis,
    PatternViolationError,
    Plant,
    SingularFactorError,
    SparsityPattern,
    build_lifted_basis,
    dilate_plant,
    max_off_pattern,
    pattern_test,
    recover_gain,
    sparse_factorize,
)
from .conic import (
    AffineMatrix,
    BackendError,
    ConicProgram,
    SolveOutcome,
    SolveStatus,
    SolverTolerances,
    available_adapters,
    get_adapter,
    register_adapter,
    solve,
    vectorize,
)
from .analysis import (
    Certificate,
    CertificationReport,
    ClosedLoop,
    certify_closed_loop,
    hinf_norm_bisection,
    hinf_norm_sweep,
    lyapunov_feasibility,
    simulate,
    spectral_radius,
)
from .synthesis import (
    Family,
    Numerics,
    Objective,
    SynthesisMethod,
    SynthesisProblem,
    SynthesisResult,
    SynthesisStatus,
    assemble_hinf,
    assemble_stabilization,
    centralized_baseline,
    channel_scale,
    synthesize,
)
from .benchmark import (
    ExperimentConfig,
    run_experiment,
    sample_instance,
    zoh_discretize,
)

__version__ = "0.1.0"

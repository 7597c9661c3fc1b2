"""Layer-wise neural-network pruning with ADMM weight updates.

The solver alternates mask selection and splitting-based weight updates on
a preconditioned least-squares problem; baselines (an exact per-column
solve and projected gradient descent) and a benchmark harness make the
trade-offs measurable.  See the CLI in :mod:`admmprune.cli`.
"""

from . import _kernels
from .baselines import (
    GdConfig,
    exact_masked_solve,
    masked_objective_gradient,
    run_fixed_mask_gd,
)
from .bench import (
    BenchSpec,
    ChainResult,
    bench_objective,
    compare_backends,
    run_bench,
    run_chain,
    wanda_mask,
)
from .errors import (
    ConfigError,
    DivergenceError,
    NotSpdError,
    ShapeError,
    SingularSystemError,
    ValidationError,
)
from .io import (
    ProblemBundle,
    TensorIOError,
    load_bundle,
    load_config,
    read_mask,
    read_report,
    read_tensor,
    write_bundle,
    write_report,
    write_tensor,
)
from .masking import (
    SparsitySchedule,
    StructurePattern,
    apply_mask,
    cubic_sparsity,
    density,
    select_structured_mask,
    select_topk_mask,
    wanda_scores,
)
from .report import IterationRecord, PruneReport
from .solver import (
    AdmmState,
    PreconditionedProblem,
    SolverConfig,
    admm_iteration,
    damped_objective,
    initial_state,
    precondition,
    prune_layer,
    reconstruction_error,
    scaled_problem,
    update_weights,
)
from .synth import gen_chain, gen_layer, gen_synthetic

__version__ = "0.1.0"

__all__ = [
    "AdmmState",
    "BenchSpec",
    "ChainResult",
    "ConfigError",
    "DivergenceError",
    "GdConfig",
    "IterationRecord",
    "NotSpdError",
    "PreconditionedProblem",
    "ProblemBundle",
    "PruneReport",
    "ShapeError",
    "SingularSystemError",
    "SolverConfig",
    "SparsitySchedule",
    "StructurePattern",
    "TensorIOError",
    "ValidationError",
    "admm_iteration",
    "apply_mask",
    "bench_objective",
    "compare_backends",
    "cubic_sparsity",
    "damped_objective",
    "density",
    "exact_masked_solve",
    "gen_chain",
    "gen_layer",
    "gen_synthetic",
    "initial_state",
    "load_bundle",
    "load_config",
    "masked_objective_gradient",
    "precondition",
    "prune_layer",
    "read_mask",
    "read_report",
    "read_tensor",
    "reconstruction_error",
    "run_bench",
    "run_chain",
    "run_fixed_mask_gd",
    "scaled_problem",
    "select_structured_mask",
    "select_topk_mask",
    "update_weights",
    "wanda_mask",
    "wanda_scores",
    "write_bundle",
    "write_report",
    "write_tensor",
    "_kernels",
]

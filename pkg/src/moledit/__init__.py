"""Molecule optimization by composing chemically valid single-step graph
edits, scored by pluggable edit-response predictors and planned with a
PUCT-guided tree search."""

from .molgraph import (
    Atom,
    Bond,
    Molecule,
    SmilesSyntaxError,
    UnsupportedFeatureError,
    canonicalize,
    check_validity,
    parse_smiles,
    ring_count,
    validity_issues,
    write_smiles,
)
from .edits import (
    EditAction,
    IncoherentActionError,
    InvalidSiteError,
    OP_KINDS,
    apply,
    describe,
    enumerate_actions,
    feasible_actions,
)
from .pairminer import (
    EditResponseSample,
    LabeledMolecule,
    build_dataset,
    decompose,
    mine_pairs,
)
from .scorer import (
    EditScorer,
    PropertyOracle,
    UnknownPropertyError,
    builtin_properties,
    exact_oracle_scorer,
    fit_group_contribution,
    get_property,
    group_contribution_scorer,
    noisy_scorer,
)
from .search import (
    OptimizationTask,
    RunStats,
    SearchConfig,
    Trajectory,
    run,
    run_bfs,
    run_search,
    utility,
)
from .metrics import (
    EmptyBatchError,
    RunRecord,
    RunSummary,
    delta,
    morgan_tanimoto,
    rank_sum,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "Atom", "Bond", "Molecule", "SmilesSyntaxError", "UnsupportedFeatureError",
    "canonicalize", "check_validity", "parse_smiles", "ring_count",
    "validity_issues", "write_smiles",
    "EditAction", "IncoherentActionError", "InvalidSiteError", "OP_KINDS",
    "apply", "describe", "enumerate_actions", "feasible_actions",
    "EditResponseSample", "LabeledMolecule", "build_dataset", "decompose",
    "mine_pairs",
    "EditScorer", "PropertyOracle", "UnknownPropertyError",
    "builtin_properties", "exact_oracle_scorer", "fit_group_contribution",
    "get_property", "group_contribution_scorer", "noisy_scorer",
    "OptimizationTask", "RunStats", "SearchConfig", "Trajectory",
    "run", "run_bfs", "run_search", "utility",
    "EmptyBatchError", "RunRecord", "RunSummary", "delta", "morgan_tanimoto",
    "rank_sum", "summarize",
]

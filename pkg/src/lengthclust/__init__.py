"""Length-based objectives for dissimilarity-based hierarchical clustering."""

__version__ = "0.1.0"

from .algorithms import (
    Bipartition,
    CutSolverPolicy,
    MergeStep,
    MergeTrace,
    agglomerate,
    recursive_sparsest_cut,
    run_algorithm,
    sparsest_cut_exact,
    sparsest_cut_local_search,
)
from .census import (
    VertexCensus,
    VertexClass,
    check_split_condition,
    classify_vertices,
    restrict_hierarchy,
    split_decomposition,
)
from .core import (
    Aggregate,
    DissimilarityMatrix,
    ExtendedHierarchy,
    Hierarchy,
    aggregate,
    build_dissimilarity,
    double_factorial_count,
    enumerate_hierarchies,
    mrca,
    restrict_dissimilarity,
    unit_dissimilarity,
)
from .estimators import (
    ALL_ESTIMATORS,
    CrossBlock,
    EstimatorKind,
    HeightEstimator,
    SubtreeContext,
    check_estimator_bounds,
    estimate_height,
    weight_sum,
)
from .io import format_newick, parse_matrix, parse_newick, read_newick, write_newick
from .objectives import (
    CostReport,
    GammaWeight,
    extended_length_cost,
    gamma_cost,
    length_cost,
    optimal_hierarchy_bruteforce,
    total_length,
)
from .ultrametric import (
    HeightFunction,
    NoiseModel,
    hierarchy_from_ultrametric,
    is_ultrametric,
    perturb,
    random_hierarchy,
    random_ultrametric,
    realize_dissimilarity,
)

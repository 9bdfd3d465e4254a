"""Attributed graph clustering with data-optimized polynomial graph filters."""

from .clustering import (
    DissimilarityGraph,
    Partition,
    cluster_volumes,
    dissimilarity_matrix,
    kmeans,
    spectral_embed,
)
from .datasets import (
    SbmParams,
    generate_sbm,
    load_content_cites,
    load_csv_dataset,
    read_results,
    write_csv_dataset,
    write_filter_response,
    write_results,
)
from .errors import (
    ConfigError,
    DatasetParseError,
    DegeneratePartitionError,
    GraficaError,
    StructuralError,
)
from .filters import (
    FilterCoefficients,
    apply_BC,
    apply_filter,
    build_B,
    build_C,
    build_S,
    candidate_eigenpairs,
    candidate_filters,
    filter_response,
    quadratic_traces,
    select_gamma,
)
from .graph import (
    AttributedGraph,
    SpectralDecomposition,
    eig_sym,
    laplacian_spectrum,
    normalize_adjacency,
    normalized_laplacian,
)
from .metrics import MetricReport, ari, cost_eq1, nmi
from .pipeline import (
    PreparedGraph,
    RunConfig,
    RunResult,
    grafica_run,
    grafica_step,
    initial_partition,
    run_baseline,
    sweep,
)

__version__ = "0.1.0"

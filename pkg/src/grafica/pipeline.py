"""Alternating partition / filter optimization, parameter sweeps and baselines."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .clustering import (
    Partition,
    cluster_volumes,
    dissimilarity_matrix,
    kmeans,
    spectral_embed,
)
from .errors import ConfigError, DegeneratePartitionError, GraficaError
from .filters import (
    BASES_MEMORY_LIMIT,
    C_VARIANTS,
    FilterCoefficients,
    build_S,
    candidate_eigenpairs,
    filter_bases,
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
from .metrics import MetricReport, cost_eq1, nmi, ari

log = logging.getLogger(__name__)

SELECTION_MODES = ("ground-truth-nmi", "internal-cost", "consecutive-nmi")
BASELINES = ("kmeans-attrs", "sc-attrs", "sc-graph")


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one alternating-optimization run.

    ``gamma=None`` selects the adaptive ratio after the initial clustering;
    a number fixes it.
    """

    k: int
    t_order: int = 3
    alpha: float = 0.0
    gamma: float | None = None
    selection: str = "ground-truth-nmi"
    seed: int = 0
    max_outer_iters: int = 50
    convergence_tol: float = 1e-4
    restarts: int = 20
    kmeans_max_iter: int = 300
    c_variant: str = "derived"
    recompute_gamma: bool = False
    row_normalize: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.t_order < 1:
            raise ConfigError("t_order must be >= 1")
        if not self.alpha >= 0:
            raise ConfigError("alpha must be >= 0")
        if self.gamma is not None and not self.gamma >= 0:
            raise ConfigError("fixed gamma must be >= 0")
        if self.selection not in SELECTION_MODES:
            raise ConfigError(f"selection must be one of {SELECTION_MODES}")
        if not self.convergence_tol > 0:
            raise ConfigError("convergence_tol must be > 0")
        if self.max_outer_iters < 1 or self.restarts < 1 or self.threads < 1:
            raise ConfigError("max_outer_iters, restarts and threads must be >= 1")
        if self.c_variant not in C_VARIANTS:
            raise ConfigError(f"c_variant must be one of {C_VARIANTS}")

    @property
    def gamma_mode(self) -> str:
        return "adaptive-ratio" if self.gamma is None else "fixed"

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("threads")  # execution detail; results do not depend on it
        return d


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    gamma: float
    metrics: tuple[float, ...]
    costs: tuple[float | None, ...]
    chosen: int
    s_eigenvalues: tuple[float, ...]
    h: tuple[float, ...]

    @property
    def metric(self) -> float:
        return self.metrics[self.chosen]


@dataclass(eq=False)
class RunResult:
    partition: Partition
    h: FilterCoefficients | None
    history: list[IterationRecord] = field(default_factory=list)
    metrics: MetricReport | None = None
    converged: bool = False
    iterations: int = 0
    gamma: float | None = None
    method: str = "grafica"
    config: dict = field(default_factory=dict)

    @property
    def nmi(self) -> float | None:
        return None if self.metrics is None else self.metrics.nmi

    @property
    def ari(self) -> float | None:
        return None if self.metrics is None else self.metrics.ari


@dataclass(frozen=True, eq=False)
class PreparedGraph:
    """Per-graph quantities shared by every run on that graph."""

    graph: AttributedGraph
    a_n: np.ndarray
    spectrum: SpectralDecomposition
    projected: np.ndarray  # U^T F

    @classmethod
    def from_graph(cls, graph: AttributedGraph) -> "PreparedGraph":
        spec = laplacian_spectrum(graph)
        return cls(graph, normalize_adjacency(graph), spec, spec.eigenvectors.T @ graph.attributes)

    def filtered(self, h) -> np.ndarray:
        coeffs = h.coeffs if isinstance(h, FilterCoefficients) else np.asarray(h, dtype=np.float64)
        lam = self.spectrum.eigenvalues
        response = np.zeros_like(lam)
        power = np.ones_like(lam)
        for c in coeffs:
            response = response + c * power
            power = power * lam
        return self.spectrum.eigenvectors @ (response[:, None] * self.projected)


@dataclass(frozen=True, eq=False)
class GraficaState:
    """Current partition with the volumes and gamma that define B and C."""

    partition: Partition
    volumes: np.ndarray
    gamma: float
    h: FilterCoefficients | None
    metric: float
    attrs: np.ndarray  # attributes the partition was computed from
    record: IterationRecord | None = None


def _prepare(graph) -> PreparedGraph:
    return graph if isinstance(graph, PreparedGraph) else PreparedGraph.from_graph(graph)


def _cluster_attrs(attrs, prep: PreparedGraph, cfg: RunConfig, seed: int):
    dg = dissimilarity_matrix(attrs)
    emb = spectral_embed(dg, prep.a_n, cfg.alpha, cfg.k, row_normalize=cfg.row_normalize)
    part = kmeans(emb, cfg.k, restarts=cfg.restarts, seed=seed, max_iter=cfg.kmeans_max_iter)
    return dg, part


def initial_partition(graph, cfg: RunConfig) -> Partition:
    """Spectral clustering of the raw attributes regularized by the graph."""
    prep = _prepare(graph)
    if cfg.k > prep.graph.n_nodes:
        raise ConfigError(f"k={cfg.k} exceeds the number of nodes")
    return _cluster_attrs(prep.graph.attributes, prep, cfg, cfg.seed)[1]


def _score(cfg, part, labels, previous, cost):
    if cfg.selection == "ground-truth-nmi":
        return nmi(part, labels)
    if cfg.selection == "consecutive-nmi":
        return nmi(part, previous)
    return -math.inf if cost is None else -cost


def _initial_state(prep: PreparedGraph, cfg: RunConfig) -> GraficaState:
    attrs = prep.graph.attributes
    dg, part = _cluster_attrs(attrs, prep, cfg, cfg.seed)
    vols = cluster_volumes(dg, part)
    if cfg.gamma is not None:
        gamma = cfg.gamma
    else:
        try:
            gamma = select_gamma(attrs, part, vols, cfg.c_variant)
        except DegeneratePartitionError as exc:
            log.warning("%s; using gamma = 0", exc)
            gamma = 0.0
    if cfg.selection == "internal-cost":
        metric = -cost_eq1(attrs, part, gamma, dg)
    else:
        metric = 0.0
    return GraficaState(part, vols, gamma, None, metric, attrs)


def _evaluate_candidate(prep, cfg, state, h, m):
    """Filter, re-cluster and score one candidate; degenerate outcomes score -inf."""
    filtered = prep.filtered(h)
    try:
        dg, part = _cluster_attrs(filtered, prep, cfg, cfg.seed + m)
        vols = cluster_volumes(dg, part)
    except GraficaError as exc:
        log.debug("candidate %d degenerate: %s", m, exc)
        return None
    try:
        cost = cost_eq1(filtered, part, state.gamma, dg)
    except DegeneratePartitionError:
        cost = None
    metric = _score(cfg, part, prep.graph.labels, state.partition, cost)
    return part, vols, filtered, cost, metric


def grafica_step(state: GraficaState, graph, cfg: RunConfig, iteration: int = 1,
                 bases=None, gram=None) -> GraficaState:
    """One filter-design / re-clustering round.

    Builds S for the current partition, evaluates every eigenvector of S
    as a filter and adopts the one with the best selection metric.
    Returns ``state`` unchanged (with ``record=None``) when every
    candidate is degenerate.
    """
    prep = _prepare(graph)
    s = build_S(prep.spectrum, prep.graph.attributes, state.partition, state.volumes,
                state.gamma, cfg.t_order, cfg.c_variant, bases=bases, gram=gram)
    eigvals, candidates = candidate_eigenpairs(s)

    def run(m):
        return _evaluate_candidate(prep, cfg, state, candidates[m], m)

    if cfg.threads > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outcomes = list(pool.map(run, range(len(candidates))))
    else:
        outcomes = [run(m) for m in range(len(candidates))]

    metrics = tuple(-math.inf if o is None else float(o[4]) for o in outcomes)
    costs = tuple(None if o is None else o[3] for o in outcomes)
    if all(o is None for o in outcomes):
        return replace(state, record=None)
    chosen = int(np.argmax(metrics))
    part, vols, filtered, _, metric = outcomes[chosen]
    h = candidates[chosen]

    gamma = state.gamma
    if cfg.recompute_gamma and cfg.gamma is None:
        try:
            gamma = select_gamma(filtered, part, vols, cfg.c_variant)
        except DegeneratePartitionError:
            pass
    record = IterationRecord(
        iteration=iteration,
        gamma=state.gamma,
        metrics=metrics,
        costs=costs,
        chosen=chosen,
        s_eigenvalues=tuple(float(v) for v in eigvals),
        h=tuple(float(v) for v in h.coeffs),
    )
    return GraficaState(part, vols, gamma, h, metric, filtered, record)


def grafica_run(graph, cfg: RunConfig) -> RunResult:
    """Alternate filter design and clustering until the selection metric settles.

    Stops when consecutive selection metrics differ by at most
    ``cfg.convergence_tol`` or after ``cfg.max_outer_iters`` rounds.

    Parameters
    ----------
    graph : AttributedGraph or PreparedGraph
        Pass a :class:`PreparedGraph` to reuse the Laplacian spectrum
        across runs.
    cfg : RunConfig
    """
    prep = _prepare(graph)
    g = prep.graph
    if cfg.selection == "ground-truth-nmi" and g.labels is None:
        raise ConfigError("ground-truth-nmi selection requires labels")
    if cfg.k > g.n_nodes:
        raise ConfigError(f"k={cfg.k} exceeds the number of nodes")

    state = _initial_state(prep, cfg)
    n, p = g.attributes.shape
    bases = gram = None
    if 2 * cfg.t_order * n * p * 8 <= BASES_MEMORY_LIMIT:
        bases = filter_bases(prep.spectrum, g.attributes, cfg.t_order)
    else:
        gram = prep.projected @ prep.projected.T

    history = []
    converged = False
    previous = state.metric
    for it in range(1, cfg.max_outer_iters + 1):
        nxt = grafica_step(state, prep, cfg, iteration=it, bases=bases, gram=gram)
        if nxt.record is None:
            log.warning("all candidates degenerate at iteration %d; stopping", it)
            break
        state = nxt
        history.append(state.record)
        log.info("iteration %d: metric %.6f (candidate %d)", it, state.metric, state.record.chosen)
        if abs(state.metric - previous) <= cfg.convergence_tol:
            converged = True
            break
        previous = state.metric

    try:
        cost = cost_eq1(state.attrs, state.partition, state.gamma)
    except DegeneratePartitionError:
        cost = None
    report = None
    if g.labels is not None:
        report = MetricReport(nmi(state.partition, g.labels), ari(state.partition, g.labels), cost)
    elif cost is not None:
        report = MetricReport(math.nan, math.nan, cost)
    cfg_doc = cfg.as_dict()
    return RunResult(
        partition=state.partition,
        h=state.h,
        history=history,
        metrics=report,
        converged=converged,
        iterations=len(history),
        gamma=state.gamma,
        method="grafica",
        config=cfg_doc,
    )


@dataclass
class SweepResult:
    rows: list[dict]
    results: list[RunResult]
    best: int

    @property
    def best_result(self) -> RunResult:
        return self.results[self.best]


def _sweep_key(res: RunResult):
    if res.metrics is not None and not math.isnan(res.metrics.nmi):
        return res.metrics.nmi
    return res.history[-1].metric if res.history else -math.inf


def sweep(graph, base_cfg: RunConfig, t_grid, alpha_grid, threads: int | None = None) -> SweepResult:
    """Run every ``(T, alpha)`` pair and report the best by NMI.

    Without ground-truth labels the best row is the one with the highest
    final selection metric. Every cell uses ``base_cfg.seed``.
    """
    t_grid, alpha_grid = list(t_grid), list(alpha_grid)
    if not t_grid or not alpha_grid:
        raise ConfigError("sweep grids must be non-empty")
    prep = _prepare(graph)
    threads = base_cfg.threads if threads is None else threads
    cells = [(t, a) for t in t_grid for a in alpha_grid]
    inner = 1 if threads > 1 and len(cells) > 1 else base_cfg.threads

    def run(cell):
        t, a = cell
        return grafica_run(prep, replace(base_cfg, t_order=int(t), alpha=float(a), threads=inner))

    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]

    rows = []
    for (t, a), res in zip(cells, results):
        rows.append({
            "t_order": int(t),
            "alpha": float(a),
            "nmi": res.nmi,
            "ari": res.ari,
            "cost": None if res.metrics is None else res.metrics.cost,
            "iterations": res.iterations,
            "converged": res.converged,
            "final_metric": res.history[-1].metric if res.history else None,
        })
    best = int(np.argmax([_sweep_key(r) for r in results]))
    return SweepResult(rows, results, best)


def run_baseline(graph, method: str, k: int, seed: int = 0, restarts: int = 20) -> RunResult:
    """Attribute-only or structure-only reference clusterings.

    ``kmeans-attrs``: k-means on the raw attributes.
    ``sc-attrs``: spectral embedding of the attribute dissimilarities (no graph term).
    ``sc-graph``: the K lowest eigenvectors of the normalized Laplacian.
    """
    if method not in BASELINES:
        raise ConfigError(f"method must be one of {BASELINES}")
    prep = graph if isinstance(graph, PreparedGraph) else None
    g = prep.graph if prep is not None else graph
    if not 1 <= k <= g.n_nodes:
        raise ConfigError(f"k must be in 1..{g.n_nodes}")
    if method == "kmeans-attrs":
        points = g.attributes
    elif method == "sc-attrs":
        points = spectral_embed(dissimilarity_matrix(g.attributes), None, 0.0, k)
    elif prep is not None:
        points = prep.spectrum.eigenvectors[:, :k]
    else:
        points = eig_sym(normalized_laplacian(g), subset=(0, k - 1)).eigenvectors
    part = kmeans(points, k, restarts=restarts, seed=seed)
    report = None
    if g.labels is not None:
        report = MetricReport(nmi(part, g.labels), ari(part, g.labels))
    return RunResult(
        partition=part,
        h=None,
        metrics=report,
        converged=True,
        method=method,
        config={"k": k, "seed": seed, "restarts": restarts},
    )


__all__ = [
    "BASELINES",
    "SELECTION_MODES",
    "GraficaState",
    "IterationRecord",
    "PreparedGraph",
    "RunConfig",
    "RunResult",
    "SweepResult",
    "grafica_run",
    "grafica_step",
    "initial_partition",
    "run_baseline",
    "sweep",
]

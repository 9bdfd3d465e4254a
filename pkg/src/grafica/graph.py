"""Attributed graph model, Laplacian normalization and the symmetric eigensolver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import StructuralError

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """Undirected graph with a node attribute matrix.

    Parameters
    ----------
    adjacency : array-like or sparse matrix, shape (N, N)
        Symmetric nonnegative weights with zero diagonal. Stored as CSR.
    attributes : array-like, shape (N, p)
        Graph signal, one row per node.
    labels : array-like of int, optional
        Ground-truth cluster ids, must cover ``0..K-1`` contiguously.
    node_ids : sequence of str, optional
        External identifiers in row order.
    info : dict
        Free-form loader metadata (e.g. skipped citation count).
    """

    adjacency: sp.csr_array
    attributes: np.ndarray
    labels: np.ndarray | None = None
    node_ids: tuple[str, ...] | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        adj = sp.csr_array(self.adjacency, dtype=np.float64)
        adj.sum_duplicates()
        adj.eliminate_zeros()
        n = adj.shape[0]
        if adj.shape != (n, n):
            raise StructuralError(f"adjacency must be square, got {adj.shape}")
        if adj.nnz and adj.data.min() < 0:
            raise StructuralError("adjacency has negative weights")
        if adj.diagonal().any():
            raise StructuralError("adjacency has nonzero diagonal entries")
        if (adj != adj.T).nnz:
            raise StructuralError("adjacency is not symmetric")

        attrs = np.asarray(
            self.attributes.toarray() if sp.issparse(self.attributes) else self.attributes,
            dtype=np.float64,
        )
        if attrs.ndim == 1:
            attrs = attrs[:, None]
        if attrs.ndim != 2 or attrs.shape[0] != n:
            raise StructuralError(
                f"attributes must have {n} rows, got shape {attrs.shape}"
            )

        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (n,):
                raise StructuralError(f"labels must have length {n}")
            if n and not np.array_equal(np.unique(labels), np.arange(labels.max() + 1)):
                raise StructuralError("labels must form the contiguous range 0..K-1")

        node_ids = self.node_ids
        if node_ids is not None:
            node_ids = tuple(str(x) for x in node_ids)
            if len(node_ids) != n:
                raise StructuralError(f"node_ids must have length {n}")

        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "node_ids", node_ids)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    @property
    def n_classes(self) -> int | None:
        if self.labels is None:
            return None
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @classmethod
    def from_edges(cls, n_nodes, edges, attributes, labels=None, node_ids=None,
                   weights=None, info=None):
        """Build a graph from an edge list.

        Edges are symmetrized with ``max(A, A.T)``, self-loops are dropped
        and duplicates collapse to a single edge (max weight).
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        w = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=np.float64)
        keep = edges[:, 0] != edges[:, 1]
        edges, w = edges[keep], w[keep]
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        vals = np.concatenate([w, w])
        key = rows * n_nodes + cols
        # duplicates keep their max weight: sort by (key, weight), take the last per key
        order = np.lexsort((vals, key))
        key, vals = key[order], vals[order]
        last = np.r_[key[1:] != key[:-1], True] if key.size else np.zeros(0, bool)
        key, vals = key[last], vals[last]
        adj = sp.csr_array((vals, (key // n_nodes, key % n_nodes)), shape=(n_nodes, n_nodes))
        return cls(adj, attributes, labels=labels, node_ids=node_ids, info=dict(info or {}))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def _inv_sqrt_degrees(adj: sp.csr_array) -> np.ndarray:
    deg = np.asarray(adj.sum(axis=1)).ravel()
    out = np.zeros_like(deg)
    nz = deg > 0
    out[nz] = 1.0 / np.sqrt(deg[nz])
    return out


def _as_adjacency(graph_or_adj) -> sp.csr_array:
    if isinstance(graph_or_adj, AttributedGraph):
        return graph_or_adj.adjacency
    adj = sp.csr_array(graph_or_adj, dtype=np.float64)
    if (abs(adj - adj.T) > SYMMETRY_TOL).nnz:
        raise StructuralError("adjacency is not symmetric")
    if adj.nnz and adj.data.min() < 0:
        raise StructuralError("adjacency has negative weights")
    return adj


def normalize_adjacency(graph, dense: bool = True):
    """Return ``D^{-1/2} A D^{-1/2}``.

    Zero-degree nodes get a zero row and column. Accepts an
    :class:`AttributedGraph` or a raw adjacency matrix.
    """
    adj = _as_adjacency(graph)
    s = _inv_sqrt_degrees(adj)
    scale = sp.diags_array(s)
    a_n = sp.csr_array(scale @ adj @ scale)
    return a_n.toarray() if dense else a_n


def normalized_laplacian(graph) -> np.ndarray:
    """Dense ``I - A_n``; isolated nodes keep a unit diagonal."""
    a_n = normalize_adjacency(graph, dense=True)
    lap = -a_n
    lap[np.diag_indices_from(lap)] += 1.0
    return lap


def eig_sym(m, subset: tuple[int, int] | None = None) -> SpectralDecomposition:
    """Dense eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    m : array-like, shape (N, N)
        Must be symmetric within ``1e-10`` absolute.
    subset : (lo, hi), optional
        Inclusive index range of ascending eigenpairs to compute.

    Returns
    -------
    SpectralDecomposition
        Eigenvalues in ascending order; eigenvectors as columns.
    """
    m = np.asarray(m.toarray() if sp.issparse(m) else m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError(f"expected a square matrix, got shape {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
        raise StructuralError("matrix is not symmetric within 1e-10")
    m = 0.5 * (m + m.T)
    if subset is None:
        w, v = scipy.linalg.eigh(m, driver="evd")
    else:
        w, v = scipy.linalg.eigh(m, subset_by_index=list(subset), driver="evr")
    return SpectralDecomposition(w, v)


def laplacian_spectrum(graph) -> SpectralDecomposition:
    """Full spectrum of the normalized Laplacian, eigenvalues clipped to [0, 2]."""
    dec = eig_sym(normalized_laplacian(graph))
    return SpectralDecomposition(np.clip(dec.eigenvalues, 0.0, 2.0), dec.eigenvectors)

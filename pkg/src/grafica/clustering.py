"""Partition update: attribute dissimilarities, regularized spectral embedding, k-means."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import StructuralError
from .graph import eig_sym

DEGREE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Partition:
    """Hard assignment of N nodes to K non-empty clusters.

    Labels are canonicalized so cluster ids appear in order of first
    occurrence; this keeps serialized results independent of k-means
    center ordering.
    """

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise StructuralError("labels must be one-dimensional")
        labels = labels.astype(np.int64)
        k = int(self.k)
        if labels.size and (labels.min() < 0 or labels.max() >= k):
            raise StructuralError(f"labels must lie in 0..{k - 1}")
        sizes = np.bincount(labels, minlength=k)
        if (sizes == 0).any():
            raise StructuralError(f"empty cluster(s): {np.flatnonzero(sizes == 0).tolist()}")
        _, first = np.unique(labels, return_index=True)
        remap = np.empty(k, dtype=np.int64)
        remap[np.argsort(first, kind="stable")] = np.arange(k)
        object.__setattr__(self, "labels", remap[labels])
        object.__setattr__(self, "k", k)

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        labels = np.asarray(labels)
        _, inv = np.unique(labels, return_inverse=True)
        return cls(inv, int(inv.max()) + 1 if inv.size else 0)

    @property
    def n_nodes(self) -> int:
        return self.labels.shape[0]

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def indicator(self) -> np.ndarray:
        """N x K 0/1 membership matrix."""
        z = np.zeros((self.n_nodes, self.k))
        z[np.arange(self.n_nodes), self.labels] = 1.0
        return z

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)


@dataclass(frozen=True, eq=False)
class DissimilarityGraph:
    """Dense squared-distance graph between attribute rows."""

    weights: np.ndarray
    degrees: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]


def squared_distances(x: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between rows; exactly symmetric, zero diagonal."""
    x = np.asarray(x, dtype=np.float64)
    sq = np.einsum("ij,ij->i", x, x)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    d = 0.5 * (d + d.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def dissimilarity_matrix(attrs) -> DissimilarityGraph:
    """Build the dissimilarity graph ``W_ij = ||F_i - F_j||^2``.

    Degrees are row sums floored at ``DEGREE_FLOOR`` so that the
    normalization stays finite when attribute rows coincide.
    """
    attrs = np.asarray(attrs, dtype=np.float64)
    if attrs.ndim == 1:
        attrs = attrs[:, None]
    if attrs.shape[0] < 2:
        raise StructuralError("need at least two rows to build a dissimilarity graph")
    w = squared_distances(attrs)
    deg = np.maximum(w.sum(axis=1), DEGREE_FLOOR)
    return DissimilarityGraph(w, deg)


def cluster_volumes(dg: DissimilarityGraph, part: Partition) -> np.ndarray:
    """Total dissimilarity degree of each cluster."""
    labels = np.asarray(part.labels)
    if labels.shape[0] != dg.n_nodes:
        raise StructuralError("partition and dissimilarity graph sizes differ")
    vols = np.bincount(labels, weights=dg.degrees, minlength=part.k)
    if (np.bincount(labels, minlength=part.k) == 0).any():
        raise StructuralError("empty cluster has no volume")
    return vols


def regularized_affinity(dg: DissimilarityGraph, a_n, alpha: float) -> np.ndarray:
    """``D_W^{-1/2} W D_W^{-1/2} - 2 alpha A_n`` as a dense symmetric matrix."""
    s = 1.0 / np.sqrt(dg.degrees)
    w = dg.weights * np.outer(s, s)
    if alpha:
        a = a_n.toarray() if sp.issparse(a_n) else np.asarray(a_n)
        w -= 2.0 * alpha * a
    return 0.5 * (w + w.T)


def spectral_embed(dg: DissimilarityGraph, a_n, alpha: float, k: int,
                   row_normalize: bool = False, return_eigenvalues: bool = False):
    """Eigenvectors of the K smallest eigenvalues of the regularized affinity.

    Parameters
    ----------
    dg : DissimilarityGraph
        Dissimilarities of the (filtered) attributes.
    a_n : array-like or sparse, shape (N, N)
        Normalized adjacency of the graph.
    alpha : float
        Weight of the structural regularizer, ``alpha >= 0``.
    k : int
        Number of eigenvectors, ``1 <= k <= N``.
    row_normalize : bool
        Scale each embedding row to unit length (off by default).
    return_eigenvalues : bool
        Also return the K eigenvalues.
    """
    n = dg.n_nodes
    if not 1 <= k <= n:
        raise StructuralError(f"k must be in 1..{n}, got {k}")
    if alpha < 0:
        raise StructuralError("alpha must be nonnegative")
    w_prime = regularized_affinity(dg, a_n, alpha)
    dec = eig_sym(w_prime, subset=None if k == n else (0, k - 1))
    emb = dec.eigenvectors[:, :k]
    if row_normalize:
        norms = np.linalg.norm(emb, axis=1, keepdims=True)
        emb = emb / np.where(norms > 0, norms, 1.0)
    if return_eigenvalues:
        return emb, dec.eigenvalues[:k]
    return emb


def _sq_dist_to_centers(points, centers):
    d = (
        np.einsum("ij,ij->i", points, points)[:, None]
        - 2.0 * points @ centers.T
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    return np.maximum(d, 0.0)


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding; returns ``(k, d)`` initial centers."""
    n = points.shape[0]
    idx = [int(rng.integers(n))]
    closest = _sq_dist_to_centers(points, points[idx]).ravel()
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # fewer distinct points than k: pick any unused index
            unused = np.setdiff1d(np.arange(n), idx)
            nxt = int(rng.choice(unused))
        idx.append(nxt)
        closest = np.minimum(closest, _sq_dist_to_centers(points, points[[nxt]]).ravel())
    return points[idx].copy()


def _repair_empty(labels, dist_to_own, k):
    sizes = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(sizes == 0):
        movable = sizes[labels] > 1
        cand = np.where(movable, dist_to_own, -np.inf)
        i = int(np.argmax(cand))
        sizes[labels[i]] -= 1
        labels[i] = j
        sizes[j] += 1
        dist_to_own[i] = 0.0
    return labels


def _centers(points, labels, k):
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    return sums / np.bincount(labels, minlength=k)[:, None]


def _wcss(points, labels, centers):
    diff = points - centers[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def lloyd(points, centers, max_iter: int = 300):
    """Lloyd iterations from fixed initial centers.

    Returns
    -------
    labels : ndarray of int
    centers : ndarray, shape (k, d)
    wcss_trace : list of float
        Within-cluster sum of squares after each center update.
    """
    points = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64).copy()
    k = centers.shape[0]
    labels = None
    trace = []
    for _ in range(max_iter):
        d = _sq_dist_to_centers(points, centers)
        new = np.argmin(d, axis=1)
        new = _repair_empty(new, d[np.arange(len(new)), new].copy(), k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = _centers(points, labels, k)
        trace.append(_wcss(points, labels, centers))
    return labels, centers, trace


def kmeans(points, k: int, restarts: int = 20, seed: int = 0, max_iter: int = 300) -> Partition:
    """Best-of-``restarts`` Lloyd k-means with k-means++ seeding.

    Restart ``r`` draws its seeding from ``default_rng(seed + r)``, so the
    result depends only on ``(points, k, restarts, seed, max_iter)``.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k <= n:
        raise StructuralError(f"need 1 <= k <= N, got k={k}, N={n}")
    if restarts < 1:
        raise StructuralError("restarts must be >= 1")
    best_labels, best_cost = None, np.inf
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        init = kmeans_plus_plus(points, k, rng)
        labels, _, trace = lloyd(points, init, max_iter=max_iter)
        if trace[-1] < best_cost:
            best_labels, best_cost = labels, trace[-1]
    return Partition(best_labels, k)

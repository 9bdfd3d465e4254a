"""Partition agreement scores and the clustering cost."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import DissimilarityGraph, Partition, cluster_volumes, dissimilarity_matrix
from .errors import DegeneratePartitionError, StructuralError


@dataclass(frozen=True)
class MetricReport:
    nmi: float
    ari: float
    cost: float | None = None

    def as_dict(self):
        return {"nmi": self.nmi, "ari": self.ari, "cost": self.cost}


def _labels(x):
    return np.asarray(x.labels if isinstance(x, Partition) else x).ravel()


def contingency(a, b) -> np.ndarray:
    """Contingency table of two labelings (rows: ``a`` clusters, cols: ``b`` clusters)."""
    a, b = _labels(a), _labels(b)
    if a.shape != b.shape:
        raise StructuralError(f"label length mismatch: {a.shape[0]} vs {b.shape[0]}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1 if ia.size else 0, ib.max() + 1 if ib.size else 0))
    np.add.at(table, (ia, ib), 1.0)
    return table


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(a, b) -> float:
    """Normalized mutual information ``2 I(a;b) / (H(a) + H(b))``.

    Two single-cluster labelings score 1; a single cluster against a
    multi-cluster labeling scores 0.
    """
    table = contingency(a, b)
    n = table.sum()
    if n < 1:
        raise StructuralError("labelings must be non-empty")
    ha = _entropy(table.sum(axis=1))
    hb = _entropy(table.sum(axis=0))
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    nz = table > 0
    pij = table[nz] / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))[nz] / n**2
    mi = float(np.sum(pij * (np.log(pij) - np.log(outer))))
    return float(np.clip(2.0 * mi / (ha + hb), 0.0, 1.0))


def _pairs(x):
    return x * (x - 1) / 2.0


def ari(a, b) -> float:
    """Adjusted Rand index (Hubert and Arabie)."""
    table = contingency(a, b)
    n = table.sum()
    if n < 2:
        raise StructuralError("ARI needs at least two items")
    index = _pairs(table).sum()
    sa = _pairs(table.sum(axis=1)).sum()
    sb = _pairs(table.sum(axis=0)).sum()
    expected = sa * sb / _pairs(n)
    max_index = 0.5 * (sa + sb)
    if max_index == expected:
        # both labelings trivial (all-one-cluster or all-singletons) and identical in form
        return 1.0
    return float((index - expected) / (max_index - expected))


def cost_eq1(filtered_attrs, part: Partition, gamma: float,
             dg: DissimilarityGraph | None = None) -> float:
    """Clustering cost: normalized intra-cluster dissimilarity minus ``gamma`` times the normalized cut.

    Volumes are degrees of the dissimilarity graph of ``filtered_attrs``;
    both sums run over ordered node pairs.
    """
    if dg is None:
        dg = dissimilarity_matrix(filtered_attrs)
    w = dg.weights
    if not np.any(w > 0):
        raise DegeneratePartitionError("all attribute rows are identical; volumes vanish")
    z = part.indicator()
    links = z.T @ w @ z
    vols = cluster_volumes(dg, part)
    within = np.diag(links)
    intra = float(np.sum(within / vols))
    inter = float(np.sum((links.sum(axis=1) - within) / vols))
    return intra - gamma * inter


def evaluate(pred, truth=None, cost: float | None = None) -> MetricReport | None:
    if truth is None:
        return None if cost is None else MetricReport(float("nan"), float("nan"), cost)
    return MetricReport(nmi(pred, truth), ari(pred, truth), cost)

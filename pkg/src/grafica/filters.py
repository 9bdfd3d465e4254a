"""Polynomial graph filter design for a fixed partition.

For a partition with cluster volumes ``vol_c`` the intra-cluster and
inter-cluster dissimilarity sums of filtered attributes ``X`` are
quadratic forms ``tr(X^T B X)`` and ``tr(X^T C X)``. Restricting ``X`` to
polynomial filters of the Laplacian turns the cost into ``h^T S h``, and
unit-norm stationary points are eigenvectors of ``S``.

Note the conventions: ``2 tr(X^T B X)`` equals the intra sum over ordered
pairs, while ``tr(X^T C X)`` equals the inter sum itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import Partition
from .errors import DegeneratePartitionError, StructuralError
from .graph import SpectralDecomposition, eig_sym

C_VARIANTS = ("derived", "literal")
UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FilterCoefficients:
    """Unit-norm coefficients ``h_0 .. h_{T-1}`` of ``sum_t h_t L^t``."""

    coeffs: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.coeffs, dtype=np.float64).ravel()
        if h.size == 0:
            raise StructuralError("filter needs at least one coefficient")
        if abs(h @ h - 1.0) > UNIT_NORM_TOL:
            raise StructuralError(f"filter coefficients must have unit norm, got {np.sqrt(h @ h)}")
        object.__setattr__(self, "coeffs", h)

    @classmethod
    def normalized(cls, coeffs) -> "FilterCoefficients":
        h = np.asarray(coeffs, dtype=np.float64).ravel()
        return cls(h / np.linalg.norm(h))

    @property
    def order(self) -> int:
        return self.coeffs.shape[0]

    def __neg__(self):
        return FilterCoefficients(-self.coeffs)


def _check(part: Partition, vols):
    vols = np.asarray(vols, dtype=np.float64)
    if vols.shape != (part.k,):
        raise StructuralError(f"expected {part.k} volumes, got shape {vols.shape}")
    if (vols <= 0).any():
        raise StructuralError("cluster volumes must be positive")
    return vols


def _c_diagonal(part: Partition, vols, variant: str) -> np.ndarray:
    if variant not in C_VARIANTS:
        raise StructuralError(f"unknown C variant {variant!r}")
    sizes = part.sizes
    inv = 1.0 / vols
    total = np.sum(sizes * inv)
    sign = 1.0 if variant == "derived" else -1.0
    return part.n_nodes * inv + sign * total - 2.0 * sizes * inv


def build_B(part: Partition, vols) -> np.ndarray:
    """Dense intra-cluster matrix: a per-cluster Laplacian of the complete graph scaled by ``1/vol_c``."""
    vols = _check(part, vols)
    inv = 1.0 / vols[part.labels]
    same = part.labels[:, None] == part.labels[None, :]
    b = np.where(same, -inv[:, None], 0.0)
    np.fill_diagonal(b, (part.sizes[part.labels] - 1) * inv)
    return b


def build_C(part: Partition, vols, variant: str = "derived") -> np.ndarray:
    """Dense inter-cluster matrix.

    ``variant="derived"`` makes ``tr(X^T C X)`` equal the inter-cluster
    sum exactly (and gives ``C = 0`` for a single cluster).
    ``variant="literal"`` flips the sign of the ``sum_k |V_k|/vol_k``
    diagonal term, as the formula is commonly printed.
    """
    vols = _check(part, vols)
    inv = 1.0 / vols[part.labels]
    same = part.labels[:, None] == part.labels[None, :]
    c = np.where(same, 0.0, -(inv[:, None] + inv[None, :]))
    np.fill_diagonal(c, _c_diagonal(part, vols, variant)[part.labels])
    return c


def _cluster_sums(part: Partition, x: np.ndarray) -> np.ndarray:
    sums = np.zeros((part.k,) + x.shape[1:])
    np.add.at(sums, part.labels, x)
    return sums


def apply_B(part: Partition, vols, x) -> np.ndarray:
    """``B @ x`` without forming B."""
    vols = _check(part, vols)
    x = np.asarray(x, dtype=np.float64)
    s = _cluster_sums(part, x)
    lab = part.labels
    scale = (1.0 / vols)[lab]
    return _bcast(scale, x) * (_bcast(part.sizes[lab], x) * x - s[lab])


def apply_C(part: Partition, vols, x, variant: str = "derived") -> np.ndarray:
    """``C @ x`` without forming C."""
    vols = _check(part, vols)
    x = np.asarray(x, dtype=np.float64)
    s = _cluster_sums(part, x)
    lab = part.labels
    inv = 1.0 / vols
    total = s.sum(axis=0)
    weighted = np.tensordot(inv, s, axes=1)
    diag = _c_diagonal(part, vols, variant)[lab]
    # off-diagonal part: -sum_{j not in c} (1/vol_c + 1/vol_b(j)) x_j
    off = _bcast(inv[lab], x) * (total - s[lab]) + (weighted - _bcast(inv, s) * s)[lab]
    return _bcast(diag, x) * x - off


def apply_BC(part: Partition, vols, gamma: float, x, variant: str = "derived") -> np.ndarray:
    """``(B - gamma C) @ x`` using the block structure."""
    out = apply_B(part, vols, x)
    if gamma:
        out -= gamma * apply_C(part, vols, x, variant)
    return out


def _bcast(v, like):
    return v.reshape(v.shape + (1,) * (np.ndim(like) - 1))


def quadratic_traces(attrs, part: Partition, vols, variant: str = "derived"):
    """Return ``(tr(F^T B F), tr(F^T C F))``."""
    f = np.asarray(attrs, dtype=np.float64)
    tb = float(np.sum(f * apply_B(part, vols, f)))
    tc = float(np.sum(f * apply_C(part, vols, f, variant)))
    return tb, tc


def select_gamma(attrs, part: Partition, vols, variant: str = "derived") -> float:
    """Balance intra and inter terms: ``gamma = tr(F^T B F) / tr(F^T C F)``."""
    tb, tc = quadratic_traces(attrs, part, vols, variant)
    scale = max(abs(tb), 1.0) * 1e-14
    if part.k < 2 or abs(tc) <= scale:
        raise DegeneratePartitionError("inter-cluster term vanishes; gamma is undefined")
    gamma = tb / tc
    if gamma < 0:
        raise DegeneratePartitionError(f"negative gamma {gamma}")
    return gamma


def filter_bases(spec: SpectralDecomposition, attrs, t_order: int) -> list[np.ndarray]:
    """``P_t = U diag(lambda^t) U^T F`` for ``t = 0..T-1``."""
    if t_order < 1:
        raise StructuralError("filter order must be >= 1")
    u = spec.eigenvectors
    g = u.T @ np.asarray(attrs, dtype=np.float64)
    bases = []
    power = np.ones_like(spec.eigenvalues)
    for _ in range(t_order):
        bases.append(u @ (power[:, None] * g))
        power = power * spec.eigenvalues
    return bases


BASES_MEMORY_LIMIT = 256 * 2**20


def build_S(spec: SpectralDecomposition, attrs, part: Partition, vols, gamma: float,
            t_order: int, variant: str = "derived", bases=None, method: str = "auto",
            gram=None) -> np.ndarray:
    """Filter-design matrix ``S_ij = tr(P_i^T (B - gamma C) P_j)``.

    Parameters
    ----------
    bases : list of ndarray, optional
        Precomputed :func:`filter_bases` output.
    method : {"auto", "bases", "spectral"}
        ``"bases"`` materializes every ``P_t`` (T x N x p floats).
        ``"spectral"`` works with N x N matrices instead:
        ``S = V (U^T M U * G G^T) V^T`` where ``G = U^T F`` and ``V`` is
        the Vandermonde matrix of the eigenvalues. ``"auto"`` picks
        ``"bases"`` unless it would exceed ``BASES_MEMORY_LIMIT`` bytes.
    gram : ndarray, optional
        Precomputed ``G G^T`` for the spectral method.
    """
    if t_order < 1:
        raise StructuralError("filter order must be >= 1")
    f = np.asarray(attrs, dtype=np.float64)
    if method == "auto":
        n, p = f.shape
        method = "bases" if bases is not None or 2 * t_order * n * p * 8 <= BASES_MEMORY_LIMIT else "spectral"
    if method == "spectral":
        return _build_S_spectral(spec, f, part, vols, gamma, t_order, variant, gram)
    if method != "bases":
        raise StructuralError(f"unknown method {method!r}")
    if bases is None:
        bases = filter_bases(spec, f, t_order)
    q = [apply_BC(part, vols, gamma, p, variant) for p in bases]
    s = np.empty((t_order, t_order))
    for i in range(t_order):
        for j in range(i, t_order):
            v = 0.5 * (np.sum(bases[i] * q[j]) + np.sum(bases[j] * q[i]))
            s[i, j] = s[j, i] = v
    return s


def _build_S_spectral(spec, f, part, vols, gamma, t_order, variant, gram):
    u, lam = spec.eigenvectors, spec.eigenvalues
    if gram is None:
        g = u.T @ f
        gram = g @ g.T
    m_hat = u.T @ apply_BC(part, vols, gamma, u, variant)
    e = m_hat * gram
    vander = np.vander(lam, t_order, increasing=True).T
    s = vander @ e @ vander.T
    return 0.5 * (s + s.T)


def candidate_filters(s) -> list[FilterCoefficients]:
    """Unit-norm eigenvectors of ``S``, ordered by ascending eigenvalue."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 0:
        s = s.reshape(1, 1)
    dec = eig_sym(s)
    return [FilterCoefficients.normalized(dec.eigenvectors[:, m]) for m in range(s.shape[0])]


def candidate_eigenpairs(s):
    """Eigenvalues and candidates of ``S`` together."""
    dec = eig_sym(np.atleast_2d(np.asarray(s, dtype=np.float64)))
    return dec.eigenvalues, [
        FilterCoefficients.normalized(dec.eigenvectors[:, m]) for m in range(dec.eigenvalues.size)
    ]


def filter_response(h, grid) -> np.ndarray:
    """Evaluate ``H(lambda) = sum_t h_t lambda^t`` on ``grid``."""
    coeffs = h.coeffs if isinstance(h, FilterCoefficients) else np.asarray(h, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    # Horner, highest degree first
    out = np.zeros_like(grid)
    for c in coeffs[::-1]:
        out = out * grid + c
    return out


def apply_filter(spec: SpectralDecomposition, h, attrs) -> np.ndarray:
    """Filtered signal ``U H(Lambda) U^T F``."""
    u = spec.eigenvectors
    coeffs = h.coeffs if isinstance(h, FilterCoefficients) else np.asarray(h, dtype=np.float64)
    response = np.zeros_like(spec.eigenvalues)
    power = np.ones_like(spec.eigenvalues)
    for c in coeffs:
        response = response + c * power
        power = power * spec.eigenvalues
    g = u.T @ np.asarray(attrs, dtype=np.float64)
    return u @ (response[:, None] * g)

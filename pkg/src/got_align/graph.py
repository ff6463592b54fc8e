"""Weighted graphs, Laplacians and the Gaussian signal model they induce."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import InvalidGraph, SingularAfterShift, ValidationError
from .linalg import check_symmetric, eigh, from_eig, matrix_sqrt_psd, sym

DEFAULT_ALPHA = 0.1

__all__ = [
    "DEFAULT_ALPHA",
    "Graph",
    "GaussianGraphDistribution",
    "laplacian",
    "distribution_from_laplacian",
    "graph_distribution",
    "pseudo_inverse_covariance",
    "matrix_sqrt_psd",
]


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with a symmetric non-negative weight matrix.

    Parameters
    ----------
    weights : array_like, shape (n, n)
        Edge weights. Must be symmetric (1e-12), non-negative, with an
        exactly zero diagonal.
    node_labels : array_like of int, optional
        Community id of every vertex.
    graph_label : int, optional
        Class id used for graph classification.
    """

    weights: np.ndarray
    node_labels: Optional[np.ndarray] = None
    graph_label: Optional[int] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] < 1:
            raise InvalidGraph(f"weights must be a non-empty square matrix, got shape {W.shape}")
        if not np.all(np.isfinite(W)):
            raise InvalidGraph("weights contain NaN or inf")
        if np.any(W < 0):
            raise InvalidGraph("weights must be non-negative")
        if np.any(np.diag(W) != 0):
            raise InvalidGraph("diagonal of weights must be exactly zero")
        if np.max(np.abs(W - W.T)) > 1e-12:
            raise InvalidGraph("weights must be symmetric")
        object.__setattr__(self, "weights", _frozen(W))
        if self.node_labels is not None:
            labels = _frozen(self.node_labels, dtype=int)
            if labels.shape != (W.shape[0],):
                raise InvalidGraph("node_labels must have one entry per vertex")
            object.__setattr__(self, "node_labels", labels)
        if self.graph_label is not None:
            object.__setattr__(self, "graph_label", int(self.graph_label))

    @property
    def n(self):
        return self.weights.shape[0]

    @classmethod
    def from_edges(cls, n, edges, **kwargs):
        """Build a graph from ``(u, v)`` or ``(u, v, w)`` tuples; repeated edges add up."""
        W = np.zeros((n, n))
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if u == v:
                raise InvalidGraph(f"self-loop at vertex {u}")
            W[u, v] += w
            W[v, u] += w
        return cls(W, **kwargs)

    def edges(self):
        """Upper-triangular edge list ``[(u, v, w), ...]`` in row-major order."""
        iu, ju = np.nonzero(np.triu(self.weights, 1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(iu, ju)]

    @property
    def num_edges(self):
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    def is_connected(self):
        if self.n == 1:
            return True
        ncomp, _ = connected_components(self.weights > 0, directed=False)
        return ncomp == 1

    def permuted(self, perm):
        """Relabel vertices so that new vertex ``k`` is old vertex ``perm[k]``."""
        perm = np.asarray(perm, dtype=int)
        labels = None if self.node_labels is None else self.node_labels[perm]
        return Graph(
            self.weights[np.ix_(perm, perm)],
            node_labels=labels,
            graph_label=self.graph_label,
            name=self.name,
        )

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_labels = (self.node_labels is None and other.node_labels is None) or (
            self.node_labels is not None
            and other.node_labels is not None
            and np.array_equal(self.node_labels, other.node_labels)
        )
        return (
            np.array_equal(self.weights, other.weights)
            and same_labels
            and self.graph_label == other.graph_label
        )

    __hash__ = None


def laplacian(g):
    """Combinatorial Laplacian ``D - W``."""
    W = g.weights
    return np.diag(W.sum(axis=1)) - W


@dataclass(frozen=True, eq=False)
class GaussianGraphDistribution:
    """Zero-mean Gaussian over graph signals.

    ``covariance`` is ``(L + alpha I)^{-1}``; its symmetric square root is
    cached because every Wasserstein evaluation needs it.
    """

    covariance: np.ndarray
    source_shift: float
    sqrt_covariance: np.ndarray

    @property
    def n(self):
        return self.covariance.shape[0]

    @classmethod
    def from_covariance(cls, covariance, source_shift=0.0):
        cov = _frozen(sym(check_symmetric(covariance, tol=1e-10)))
        return cls(cov, float(source_shift), _frozen(matrix_sqrt_psd(cov)))


def distribution_from_laplacian(L, alpha=DEFAULT_ALPHA):
    """Gaussian signal model with covariance ``(L + alpha I)^{-1}``.

    Parameters
    ----------
    L : array_like, shape (n, n)
        Symmetric positive semi-definite (Laplacian-like) matrix.
    alpha : float
        Positive diagonal shift replacing the pseudo-inverse.

    Raises
    ------
    NonSymmetric
        If ``L`` is asymmetric beyond 1e-8.
    SingularAfterShift
        If ``L + alpha I`` has an eigenvalue below 1e-12.
    """
    if not alpha > 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    L = check_symmetric(L)
    lam, U = eigh(L + alpha * np.eye(L.shape[0]))
    if lam[0] < 1e-12:
        raise SingularAfterShift(
            f"L + alpha*I has eigenvalue {lam[0]:.3e}; increase alpha (currently {alpha})"
        )
    cov = sym(from_eig(U, 1.0 / lam))
    root = sym(from_eig(U, 1.0 / np.sqrt(lam)))
    return GaussianGraphDistribution(_frozen(cov), float(alpha), _frozen(root))


def graph_distribution(g, alpha=DEFAULT_ALPHA):
    return distribution_from_laplacian(laplacian(g), alpha)


def pseudo_inverse_covariance(L, rcond=1e-10):
    """Moore-Penrose inverse of a Laplacian, for small-graph reference checks.

    The result is singular on disconnected components' indicator vectors, so it
    is returned as a plain matrix rather than a distribution.
    """
    L = check_symmetric(L)
    if L.shape[0] > 64:
        raise ValidationError("pseudo-inverse mode is limited to n <= 64")
    lam, U = eigh(L)
    cut = rcond * max(1.0, np.max(np.abs(lam)))
    inv = np.zeros_like(lam)
    keep = np.abs(lam) > cut
    inv[keep] = 1.0 / lam[keep]
    return sym(from_eig(U, inv))

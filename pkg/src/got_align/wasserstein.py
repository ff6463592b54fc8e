"""Closed-form Wasserstein-2 geometry between zero-mean Gaussians on graphs."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NumericalError, SingularSource
from .graph import DEFAULT_ALPHA, GaussianGraphDistribution, distribution_from_laplacian, graph_distribution, laplacian
from .linalg import eigh, from_eig, matrix_sqrt_psd, sym, trace_sqrt_psd

__all__ = [
    "TransportMap",
    "w2_squared",
    "transport_map",
    "aligned_distribution",
    "graph_alignment_cost",
    "l2_alignment_cost",
]

NEGATIVE_GUARD = 1e-9


def _matrix(P):
    return np.asarray(getattr(P, "matrix", P), dtype=float)


def _check_same_dim(a, b):
    if a.n != b.n:
        raise DimensionMismatch(f"distributions have dimensions {a.n} and {b.n}")


def w2_squared(a, b):
    """Squared 2-Wasserstein distance between ``N(0, Sa)`` and ``N(0, Sb)``.

    ``Tr(Sa) + Tr(Sb) - 2 Tr((Sa^1/2 Sb Sa^1/2)^1/2)``, clamped at zero.
    """
    _check_same_dim(a, b)
    root = a.sqrt_covariance
    cross = trace_sqrt_psd(sym(root @ b.covariance @ root))
    raw = np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * cross
    scale = max(1.0, np.trace(a.covariance) + np.trace(b.covariance))
    if raw < -NEGATIVE_GUARD * scale:
        raise NumericalError(f"W2^2 evaluated to {raw:.3e} < 0 beyond roundoff")
    return float(max(raw, 0.0))


@dataclass(frozen=True, eq=False)
class TransportMap:
    """Linear optimal map pushing ``source`` forward onto ``target``."""

    matrix: np.ndarray
    source: GaussianGraphDistribution
    target: GaussianGraphDistribution

    def __call__(self, x):
        """Transport a signal (or a batch of signals along the last axis)."""
        return np.asarray(x) @ self.matrix.T

    def pushforward_error(self):
        """Relative Frobenius error of ``T Sa T^T`` against ``Sb``."""
        T = self.matrix
        pushed = T @ self.source.covariance @ T.T
        ref = self.target.covariance
        return float(np.linalg.norm(pushed - ref) / max(np.linalg.norm(ref), 1e-300))


def transport_map(a, b):
    """Optimal linear map ``T = Sa^-1/2 (Sa^1/2 Sb Sa^1/2)^1/2 Sa^-1/2``."""
    _check_same_dim(a, b)
    lam, U = eigh(a.covariance)
    if lam[0] < 1e-12:
        raise SingularSource(f"source covariance has eigenvalue {lam[0]:.3e}")
    root = from_eig(U, np.sqrt(lam))
    inv_root = from_eig(U, 1.0 / np.sqrt(lam))
    middle = matrix_sqrt_psd(sym(root @ b.covariance @ root))
    return TransportMap(sym(inv_root @ middle @ inv_root), a, b)


def aligned_distribution(P, g2, alpha=DEFAULT_ALPHA):
    """Signal model of ``g2`` seen through assignment ``P``: ``(P L2 P^T + alpha I)^-1``."""
    P = _matrix(P)
    if P.ndim != 2 or P.shape[1] != g2.n:
        raise DimensionMismatch(f"assignment of shape {P.shape} does not match a {g2.n}-node graph")
    return distribution_from_laplacian(sym(P @ laplacian(g2) @ P.T), alpha)


def _check_assignment(g1, g2, P):
    if P.shape != (g1.n, g2.n):
        raise DimensionMismatch(f"assignment shape {P.shape} != ({g1.n}, {g2.n})")


def graph_alignment_cost(g1, g2, P, alpha=DEFAULT_ALPHA):
    """W2^2 between ``g1``'s signal model and ``g2`` aligned through ``P``."""
    P = _matrix(P)
    _check_assignment(g1, g2, P)
    return w2_squared(graph_distribution(g1, alpha), aligned_distribution(P, g2, alpha))


def l2_alignment_cost(g1, g2, P):
    """Squared Frobenius norm ``||L1 - P L2 P^T||^2``."""
    P = _matrix(P)
    _check_assignment(g1, g2, P)
    diff = laplacian(g1) - P @ laplacian(g2) @ P.T
    return float(np.sum(diff * diff))

"""Clustering, NMI, community transfer and 1-NN graph classification."""

from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

from .assignment import SoftAssignment, resolve_kmax, round_to_hard
from .errors import DegenerateLabels, KTooLarge, LengthMismatch, ValidationError

__all__ = [
    "DistanceMatrix",
    "spectral_clustering",
    "nmi",
    "one_nn_accuracy",
    "transfer_labels",
    "community_transfer_nmi",
]

KMEANS_RESTARTS = 50


def _canonical(labels):
    """Relabel so clusters are numbered by first appearance."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse]


def spectral_clustering(g, k, seed=0):
    """Normalised spectral clustering of the vertices of ``g`` into ``k`` groups.

    Uses the ``k`` smallest eigenvectors of ``I - D^-1/2 W D^-1/2`` (isolated
    vertices contribute a zero degree term), unit-normalised rows, and
    k-means++ with 50 restarts seeded by ``seed``.
    """
    n = g.n
    if k > n:
        raise KTooLarge(f"cannot form {k} clusters from {n} vertices")
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if k == n:
        return np.arange(n)
    W = g.weights
    deg = W.sum(axis=1)
    dinv = np.zeros(n)
    np.divide(1.0, np.sqrt(deg), out=dinv, where=deg > 0)
    L = np.eye(n) - dinv[:, None] * W * dinv[None, :]
    _, vecs = np.linalg.eigh(0.5 * (L + L.T))
    emb = vecs[:, :k]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    emb = np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 0)
    km = KMeans(n_clusters=k, init="k-means++", n_init=KMEANS_RESTARTS, random_state=seed)
    return _canonical(km.fit_predict(emb))


def _entropy(counts, total):
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log(p)))


def nmi(a, b):
    """Normalised mutual information ``I(a; b) / sqrt(H(a) H(b))`` (natural log).

    Identical partitions score 1 (including two constant labelings); a
    constant labeling against a non-constant one scores 0.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"label vectors have shapes {a.shape} and {b.shape}")
    if a.size == 0:
        raise LengthMismatch("label vectors are empty")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    n = a.size
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1.0)
    row = table.sum(axis=1)
    col = table.sum(axis=0)
    if table.shape[0] == table.shape[1] and np.count_nonzero(table) == table.shape[0]:
        return 1.0
    ha, hb = _entropy(row, n), _entropy(col, n)
    if ha == 0.0 or hb == 0.0:
        return 0.0
    nz = table > 0
    pij = table[nz] / n
    outer = (row[:, None] * col[None, :])[nz] / n**2
    mi = float(np.sum(pij * np.log(pij / outer)))
    return float(np.clip(mi / np.sqrt(ha * hb), 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Pairwise graph distances with class labels; symmetrised on construction."""

    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        D = np.array(self.values, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValidationError(f"distance matrix must be square, got {D.shape}")
        if not np.all(np.isfinite(D)) or np.any(D < 0):
            raise ValidationError("distances must be finite and non-negative")
        D = 0.5 * (D + D.T)
        np.fill_diagonal(D, 0.0)
        D.setflags(write=False)
        labels = np.array(self.labels, dtype=int)
        if labels.shape != (D.shape[0],):
            raise LengthMismatch("one label per graph is required")
        labels.setflags(write=False)
        object.__setattr__(self, "values", D)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self):
        return self.values.shape[0]

    def to_dict(self):
        return {
            "kind": "distance_matrix",
            "labels": self.labels.tolist(),
            "values": self.values.tolist(),
        }


def one_nn_accuracy(d):
    """Leave-one-out 1-NN accuracy; ties go to the lowest index."""
    if d.m < 2:
        raise DegenerateLabels("need at least two graphs")
    if np.unique(d.labels).size < 2:
        raise DegenerateLabels("need at least two classes")
    D = np.array(d.values)
    np.fill_diagonal(D, np.inf)
    nearest = np.argmin(D, axis=1)
    return float(np.mean(d.labels[nearest] == d.labels))


def _as_assignment(P, r, c):
    if isinstance(P, SoftAssignment):
        return P
    return SoftAssignment(np.asarray(P, dtype=float), resolve_kmax("auto", r, c))


def transfer_labels(labels2, P):
    """Labels of the smaller graph induced from the larger one through ``P``.

    ``P`` is rounded to a hard assignment; each row takes the most frequent
    label among its columns (ties to the smallest label).
    """
    P = _as_assignment(P, *np.shape(getattr(P, "matrix", P)))
    H = P if P.is_hard else round_to_hard(P)
    owner = np.argmax(H.matrix, axis=0)
    labels2 = np.asarray(labels2)
    out = np.empty(H.shape[0], dtype=labels2.dtype)
    for i in range(H.shape[0]):
        vals, counts = np.unique(labels2[owner == i], return_counts=True)
        out[i] = vals[np.argmax(counts)]
    return out


def community_transfer_nmi(g1, g2, P, k, seed=0):
    """NMI between ``g1``'s spectral clusters and ``g2``'s clusters carried over by ``P``."""
    P = _as_assignment(P, g1.n, g2.n)
    if P.shape != (g1.n, g2.n):
        raise LengthMismatch(f"assignment shape {P.shape} != ({g1.n}, {g2.n})")
    induced = transfer_labels(spectral_clustering(g2, k, seed), P)
    return nmi(induced, spectral_clustering(g1, k, seed))

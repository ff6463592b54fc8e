"""Synthetic benchmark graphs: SBMs, edge-collapse distortion, permutations."""

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .errors import DisconnectedAfterRetries, TooFewVertices, ValidationError
from .graph import Graph

__all__ = [
    "SbmSpec",
    "CollapseRecord",
    "generate_sbm",
    "collapse_edges",
    "permute_graph",
    "fused_count",
]

MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class SbmSpec:
    block_sizes: Tuple[int, ...] = (6, 6, 6, 6)
    p_in: float = 0.9
    p_out: float = 0.05
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes or min(sizes) < 1:
            raise ValidationError("block sizes must be positive")
        object.__setattr__(self, "block_sizes", sizes)
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise ValidationError(f"need 0 <= p_out <= p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}")

    @property
    def n(self):
        return sum(self.block_sizes)


def generate_sbm(spec, require_connected=True):
    """Unit-weight stochastic block model with ``node_labels`` set to block ids.

    Draws are resampled from the same seeded stream until the graph is
    connected (at most 100 attempts) unless ``require_connected`` is false.
    """
    rng = np.random.default_rng(spec.seed)
    labels = np.repeat(np.arange(len(spec.block_sizes)), spec.block_sizes)
    n = labels.size
    probs = np.where(labels[:, None] == labels[None, :], spec.p_in, spec.p_out)
    iu = np.triu_indices(n, 1)
    for _ in range(MAX_ATTEMPTS):
        draw = rng.random(iu[0].size) < probs[iu]
        W = np.zeros((n, n))
        W[iu] = draw
        g = Graph(W + W.T, node_labels=labels)
        if not require_connected or g.is_connected():
            return g
    raise DisconnectedAfterRetries(
        f"no connected SBM sample in {MAX_ATTEMPTS} attempts (p_in={spec.p_in}, p_out={spec.p_out})"
    )


@dataclass(frozen=True, eq=False)
class CollapseRecord:
    """Ground truth of an edge-collapse distortion.

    ``assignment[i, j] = 1`` iff original vertex ``j`` was merged into
    surviving vertex ``i`` (rows index the smaller graph). ``merge_sequence``
    lists the merged pairs as vertex indices of the graph current at that step.
    """

    original_n: int
    final_n: int
    assignment: np.ndarray
    merge_sequence: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def k_max(self):
        return int(self.assignment.sum(axis=1).max())


def fused_count(n, fuse_fraction):
    """Number of vertices removed for a fuse fraction: ``ceil(fraction * n)``."""
    return int(math.ceil(round(fuse_fraction * n, 9)))


def collapse_edges(g, fuse_fraction, seed=0):
    """Merge endpoints of uniformly random edges until enough vertices are fused.

    Parallel edges created by a merge add their weights; self-loops are
    dropped. Node labels, when present, follow the majority of each group.
    """
    if not 0.0 <= fuse_fraction < 1.0:
        raise ValidationError(f"fuse_fraction must lie in [0, 1), got {fuse_fraction}")
    n = g.n
    target = fused_count(n, fuse_fraction)
    if n - target < 2:
        raise TooFewVertices(f"fusing {target} of {n} vertices leaves fewer than 2")
    rng = np.random.default_rng(seed)
    W = np.array(g.weights)
    groups = [[j] for j in range(n)]
    merges = []
    for _ in range(target):
        iu, ju = np.nonzero(np.triu(W, 1))
        if iu.size == 0:
            raise TooFewVertices("ran out of edges to collapse (graph is not connected)")
        e = rng.integers(iu.size)
        u, v = int(iu[e]), int(ju[e])
        W[u, :] += W[v, :]
        W[:, u] += W[:, v]
        W[u, u] = 0.0
        W = np.delete(np.delete(W, v, axis=0), v, axis=1)
        groups[u].extend(groups[v])
        del groups[v]
        merges.append((u, v))
    P = np.zeros((len(groups), n))
    for i, members in enumerate(groups):
        P[i, members] = 1.0
    labels = None
    if g.node_labels is not None:
        labels = []
        for members in groups:
            vals, counts = np.unique(g.node_labels[members], return_counts=True)
            labels.append(vals[np.argmax(counts)])
    collapsed = Graph(W, node_labels=labels, graph_label=g.graph_label, name=g.name)
    return collapsed, CollapseRecord(n, len(groups), P, merges)


def permute_graph(g, seed=0):
    """Uniformly random vertex relabelling.

    Returns ``(h, perm)`` with ``h.weights = g.weights[perm][:, perm]``;
    ``h.permuted(np.argsort(perm))`` restores ``g``.
    """
    perm = np.random.default_rng(seed).permutation(g.n)
    return g.permuted(perm), perm

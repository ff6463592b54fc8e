"""Benchmark drivers: SBM community recovery sweeps and pairwise graph distances.

Jobs are independent and may run in a process pool; results are always
placed by job key so the output does not depend on scheduling.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .datagen import SbmSpec, collapse_edges, generate_sbm, permute_graph
from .errors import ValidationError
from .evaluation import DistanceMatrix, community_transfer_nmi, one_nn_accuracy
from .io import GraphCollection
from .optimizer import OBJECTIVES, AlignConfig, align_pair

__all__ = [
    "default_workers",
    "split_blocks",
    "distortion_pair",
    "independent_pair",
    "bench_sbm",
    "summarize",
    "pairwise_distances",
    "block_count_collection",
    "classify",
]

WORKERS_ENV = "GOT_ALIGN_WORKERS"
N_BLOCKS = 4
G2_SIZE = 24
SBM_P_IN = 0.9
SBM_P_OUT = 0.05


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_jobs(fn, jobs, workers=1):
    """``[fn(job) for job in jobs]``, optionally in a process pool."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _subseeds(seed, count):
    return [int(s) for s in np.random.SeedSequence(int(seed)).generate_state(count)]


def split_blocks(n, k=N_BLOCKS):
    """Near-equal block sizes summing to ``n``."""
    base, extra = divmod(n, k)
    return tuple(base + (1 if i < extra else 0) for i in range(k))


def distortion_pair(fuse_fraction, seed, p_in=SBM_P_IN, p_out=SBM_P_OUT, n=G2_SIZE):
    """``G2`` is a 4-block SBM; ``G1`` is ``G2`` edge-collapsed then permuted.

    Returns ``(g1, g2, truth)`` where ``truth`` is the ground-truth
    assignment of ``g1`` (rows) onto ``g2`` (columns).
    """
    s_sbm, s_collapse, s_perm = _subseeds(seed, 3)
    g2 = generate_sbm(SbmSpec(split_blocks(n), p_in, p_out, s_sbm))
    collapsed, record = collapse_edges(g2, fuse_fraction, s_collapse)
    g1, perm = permute_graph(collapsed, s_perm)
    return g1, g2, record.assignment[perm]


def independent_pair(size, seed, p_in=SBM_P_IN, p_out=SBM_P_OUT, n=G2_SIZE):
    """Two unrelated 4-block SBMs with ``size`` and ``n`` vertices."""
    s1, s2 = _subseeds(seed, 2)
    g2 = generate_sbm(SbmSpec(split_blocks(n), p_in, p_out, s2))
    g1 = generate_sbm(SbmSpec(split_blocks(size), p_in, p_out, s1))
    return g1, g2


def _bench_job(job):
    mode, point, seed, cfg, objectives, p_in, p_out = job
    if mode == "collapse":
        g1, g2, _ = distortion_pair(point, seed, p_in, p_out)
    else:
        g1, g2 = independent_pair(int(point), seed, p_in, p_out)
    rows = []
    for objective in objectives:
        res = align_pair(g1, g2, replace(cfg, objective=objective, seed=seed))
        rows.append(
            {
                "mode": mode,
                "point": point,
                "seed": seed,
                "objective": objective,
                "n1": g1.n,
                "n2": g2.n,
                "k_max": res.k_max,
                "nmi": community_transfer_nmi(g1, g2, res.hard, N_BLOCKS, seed),
                "l2": res.hard_l2,
                "w2": res.w2,
                "hard_w2": res.hard_w2,
                "final_loss": float(res.losses[-1]),
            }
        )
    return rows


def bench_sbm(points, seeds, cfg=None, mode="collapse", objectives=OBJECTIVES,
              workers=1, p_in=SBM_P_IN, p_out=SBM_P_OUT):
    """Community-recovery sweep.

    Parameters
    ----------
    points : sequence
        Fuse fractions (``mode="collapse"``) or sizes of ``G1``
        (``mode="independent"``).
    seeds : sequence of int
    cfg : AlignConfig
        Base configuration; ``objective`` and ``seed`` are overridden per run.

    Returns
    -------
    list of dict
        One row per (point, seed, objective), ordered by that key.
    """
    if mode not in ("collapse", "independent"):
        raise ValidationError(f"unknown mode {mode!r}")
    cfg = cfg or AlignConfig()
    jobs = [(mode, p, int(s), cfg, tuple(objectives), p_in, p_out) for p in points for s in seeds]
    return [row for rows in run_jobs(_bench_job, jobs, workers) for row in rows]


def summarize(rows, objectives=OBJECTIVES):
    """Mean and standard deviation of NMI and aligned l2 per grid point."""
    table = []
    for point in dict.fromkeys(r["point"] for r in rows):
        entry = {"point": point}
        for objective in objectives:
            sel = [r for r in rows if r["point"] == point and r["objective"] == objective]
            for metric in ("nmi", "l2"):
                vals = np.array([r[metric] for r in sel])
                entry[f"{objective}_{metric}_mean"] = float(vals.mean())
                entry[f"{objective}_{metric}_std"] = float(vals.std())
            entry[f"{objective}_runs"] = len(sel)
        table.append(entry)
    return table


def block_count_collection(per_class=10, n=20, block_counts=(2, 4), seed=0,
                           p_in=SBM_P_IN, p_out=SBM_P_OUT):
    """Synthetic classification set: class ``k`` holds SBMs with ``block_counts[k]`` blocks."""
    seeds = _subseeds(seed, per_class * len(block_counts))
    graphs, labels = [], []
    for label, blocks in enumerate(block_counts):
        for i in range(per_class):
            s = seeds[label * per_class + i]
            g = generate_sbm(SbmSpec(split_blocks(n, blocks), p_in, p_out, s))
            graphs.append(replace(g, graph_label=label, name=f"sbm{blocks}_{i}"))
            labels.append(label)
    return GraphCollection(graphs, labels, f"sbm{'-'.join(map(str, block_counts))}")


def _distance_job(job):
    ga, gb, cfg = job
    return align_pair(ga, gb, cfg).cost


def pairwise_distances(graphs, labels, cfg=None, workers=1):
    """Alignment cost for every unordered pair (smaller graph first)."""
    cfg = cfg or AlignConfig()
    m = len(graphs)
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    costs = run_jobs(_distance_job, [(graphs[i], graphs[j], cfg) for i, j in pairs], workers)
    D = np.zeros((m, m))
    for (i, j), d in zip(pairs, costs):
        D[i, j] = D[j, i] = d
    return DistanceMatrix(D, labels)


def classify(collection, cfg=None, workers=1):
    """1-NN leave-one-out accuracy of alignment distances on a collection."""
    cfg = cfg or AlignConfig()
    dm = pairwise_distances(collection.graphs, collection.labels, cfg, workers)
    return {
        "kind": "classification",
        "dataset": collection.name,
        "config": cfg.to_dict(),
        "m": len(collection),
        "accuracy": one_nn_accuracy(dm),
        "distance_matrix": dm.to_dict(),
    }

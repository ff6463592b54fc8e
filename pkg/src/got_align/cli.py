"""Command-line interface: ``got-align {align,distance,classify,bench-sbm,gen-sbm}``.

Exit codes: 0 success, 2 validation or I/O error, 3 numerical failure.
"""

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import bench
from .assignment import SoftAssignment
from .datagen import SbmSpec, generate_sbm
from .errors import NumericalError, ValidationError
from .graph import graph_distribution
from .io import read_edge_list, read_tu_collection, write_edge_list, write_result, write_table
from .optimizer import OBJECTIVES, AlignConfig, align_pair
from .wasserstein import aligned_distribution, graph_alignment_cost, transport_map

log = logging.getLogger("got_align")


def _kmax(text):
    if text == "auto":
        return text
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k-max must be an integer or 'auto', got {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("--k-max must be >= 1")
    return k


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_align_flags(p):
    d = AlignConfig()
    p.add_argument("--tau", type=float, default=d.tau, help="Dykstra temperature (default %(default)s)")
    p.add_argument("--gamma", type=float, default=d.gamma, help="AMSGrad step size (default %(default)s)")
    p.add_argument("--samples", type=int, default=d.samples, help="noise samples per iteration")
    p.add_argument("--iters", type=int, default=d.sgd_iters, help="SGD iterations")
    p.add_argument("--dykstra-iters", type=int, default=d.dykstra_iters)
    p.add_argument("--k-max", type=_kmax, default=d.k_max, help="integer or 'auto' (1 + |V2| - |V1|)")
    p.add_argument("--alpha", type=float, default=d.alpha, help="Laplacian diagonal shift")
    p.add_argument("--objective", choices=OBJECTIVES, default=d.objective)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--workers", type=int, default=None,
                   help=f"process pool size (default ${bench.WORKERS_ENV} or 1)")
    p.add_argument("--out", required=True, help="output record path")


def _config(args):
    return AlignConfig(
        tau=args.tau,
        gamma=args.gamma,
        samples=args.samples,
        sgd_iters=args.iters,
        dykstra_iters=args.dykstra_iters,
        k_max=args.k_max,
        alpha=args.alpha,
        seed=args.seed,
        objective=args.objective,
    )


def _workers(args):
    return args.workers if args.workers is not None else bench.default_workers()


def _progress(it, loss, state):
    log.debug("iter %d loss %.6g", it, loss)


def _hard_summary(res):
    owners = np.argmax(res.hard.matrix, axis=0)
    return [np.flatnonzero(owners == i).tolist() for i in range(res.hard.shape[0])]


def cmd_align(args):
    ga, gb = read_edge_list(args.g1), read_edge_list(args.g2)
    cfg = _config(args)
    runs = []
    for k in range(args.repeats):
        runs.append(align_pair(ga, gb, replace(cfg, seed=cfg.seed + k), _progress))
    best = min(range(len(runs)), key=lambda k: (runs[k].cost, k))
    res = runs[best]
    record = {
        "kind": "alignment",
        "command": "align",
        "inputs": {"g1": str(args.g1), "g2": str(args.g2)},
        "config": cfg.to_dict(),
        "repeats": args.repeats,
        "best_seed": res.config.seed,
        "result": res.to_dict(),
    }
    if args.repeats > 1:
        record["costs_by_seed"] = [[r.config.seed, r.cost] for r in runs]
    write_result(record, args.out)
    rows, cols = res.soft.shape
    print(f"W2^2 = {res.w2:.6g}  (cost[{cfg.objective}] = {res.cost:.6g}, hard W2^2 = {res.hard_w2:.6g})")
    print(f"assignment {rows}x{cols}, k_max={res.k_max}, smaller graph = {'g2' if res.swapped else 'g1'}")
    for i, members in enumerate(_hard_summary(res)):
        print(f"  {i} -> {members}")
    return 0


def cmd_distance(args):
    ga, gb = read_edge_list(args.g1), read_edge_list(args.g2)
    cfg = _config(args)
    swapped = ga.n > gb.n
    g1, g2 = (gb, ga) if swapped else (ga, gb)
    if args.no_align:
        if g1.n != g2.n:
            raise ValidationError("--no-align requires graphs of the same size")
        P = SoftAssignment(np.eye(g1.n), 1)
        result = None
    else:
        result = align_pair(g1, g2, cfg, _progress)
        P = result.hard if args.hard else result.soft
    src = graph_distribution(g1, cfg.alpha)
    dst = aligned_distribution(P, g2, cfg.alpha)
    T = transport_map(src, dst)
    w2 = graph_alignment_cost(g1, g2, P, cfg.alpha)
    record = {
        "kind": "distance",
        "command": "distance",
        "inputs": {"g1": str(args.g1), "g2": str(args.g2)},
        "config": cfg.to_dict(),
        "aligned": not args.no_align,
        "assignment_used": "identity" if args.no_align else ("hard" if args.hard else "soft"),
        "swapped": swapped,
        "w2": w2,
        "assignment": P.matrix.tolist(),
        "transport_map": T.matrix.tolist(),
        "pushforward_error": T.pushforward_error(),
    }
    if result is not None:
        record["losses"] = result.losses.tolist()
    write_result(record, args.out)
    print(f"W2^2 = {w2:.6g}")
    return 0


def cmd_classify(args):
    coll = read_tu_collection(args.dataset_dir, args.name)
    if args.subsample is not None and args.subsample < len(coll):
        coll = coll.subsample(args.subsample, args.seed)
    cfg = _config(args)
    record = bench.classify(coll, cfg, _workers(args))
    record["command"] = "classify"
    record["inputs"] = {"dataset_dir": str(args.dataset_dir), "name": args.name, "subsample": args.subsample}
    write_result(record, args.out)
    print(f"{args.name}: 1-NN accuracy {record['accuracy']:.4f} on {record['m']} graphs ({cfg.objective})")
    return 0


def cmd_bench_sbm(args):
    cfg = _config(args)
    if args.mode == "collapse":
        points = args.fractions
    else:
        points = args.sizes
    seeds = list(range(args.seed, args.seed + args.repeats))
    rows = bench.bench_sbm(points, seeds, cfg, args.mode, OBJECTIVES, _workers(args), args.p_in, args.p_out)
    table = bench.summarize(rows)
    record = {
        "kind": "bench_sbm",
        "command": "bench-sbm",
        "mode": args.mode,
        "config": cfg.to_dict(),
        "sbm": {"n2": bench.G2_SIZE, "blocks": bench.N_BLOCKS, "p_in": args.p_in, "p_out": args.p_out},
        "points": points,
        "seeds": seeds,
        "runs": rows,
        "table": table,
    }
    write_result(record, args.out)
    if args.table:
        write_table(table, args.table)
    key = "fuse_fraction" if args.mode == "collapse" else "n1"
    for entry in table:
        parts = [f"{key}={entry['point']}"]
        for obj in OBJECTIVES:
            parts.append(
                f"{obj}: nmi {entry[f'{obj}_nmi_mean']:.3f}+-{entry[f'{obj}_nmi_std']:.3f} "
                f"l2 {entry[f'{obj}_l2_mean']:.3f}+-{entry[f'{obj}_l2_std']:.3f}"
            )
        print("  ".join(parts))
    return 0


def cmd_gen_sbm(args):
    spec = SbmSpec(tuple(args.blocks), args.p_in, args.p_out, args.seed)
    g = generate_sbm(spec, require_connected=not args.allow_disconnected)
    write_edge_list(g, args.out)
    print(f"wrote {g.n}-node SBM with {g.num_edges} edges to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="got-align", description="Align graphs by the Wasserstein distance between their signal distributions.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every SGD iteration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align two graphs stored as edge lists")
    p.add_argument("g1")
    p.add_argument("g2")
    p.add_argument("--repeats", type=int, default=1, help="restarts with consecutive seeds; best cost kept")
    _add_align_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("distance", help="W2^2 and transport map between two graphs")
    p.add_argument("g1")
    p.add_argument("g2")
    p.add_argument("--no-align", action="store_true", help="use the identity assignment (same-size graphs)")
    p.add_argument("--hard", action="store_true", help="use the rounded assignment instead of the soft one")
    _add_align_flags(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("classify", help="1-NN classification of a TU-format dataset")
    p.add_argument("dataset_dir")
    p.add_argument("name")
    p.add_argument("--subsample", type=int, default=None, help="number of graphs to draw (seeded)")
    _add_align_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bench-sbm", help="SBM community-recovery sweep")
    p.add_argument("--mode", choices=("collapse", "independent"), default="collapse")
    p.add_argument("--fractions", type=_float_list, default=[0.0, 0.1, 0.2, 0.3])
    p.add_argument("--sizes", type=_int_list, default=[12, 16, 20, 24])
    p.add_argument("--repeats", type=int, default=20, help="number of seeds per grid point")
    p.add_argument("--p-in", type=float, default=bench.SBM_P_IN)
    p.add_argument("--p-out", type=float, default=bench.SBM_P_OUT)
    p.add_argument("--table", help="also write the summary table as CSV")
    _add_align_flags(p)
    p.set_defaults(func=cmd_bench_sbm)

    p = sub.add_parser("gen-sbm", help="write a stochastic block model as an edge list")
    p.add_argument("--blocks", type=_int_list, default=[6, 6, 6, 6])
    p.add_argument("--p-in", type=float, default=bench.SBM_P_IN)
    p.add_argument("--p-out", type=float, default=bench.SBM_P_OUT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-disconnected", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_sbm)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if getattr(args, "repeats", 1) < 1:
        parser.error("--repeats must be >= 1")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"got-align: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, OSError) as exc:
        print(f"got-align: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Graph files, TU-format datasets and JSON result records.

Formats are documented in ``docs/formats.md``.
"""

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from .errors import GotAlignError, IndexOutOfRange, InconsistentIndicator, MissingFile, ParseError, ValidationError
from .graph import Graph

__all__ = [
    "SCHEMA_VERSION",
    "GraphCollection",
    "read_edge_list",
    "write_edge_list",
    "read_tu_collection",
    "write_result",
    "read_result",
    "write_table",
]

SCHEMA_VERSION = "1"


class IoError(GotAlignError, OSError):
    pass


def write_edge_list(g, path):
    """Write ``g`` as ``# n=<count>`` followed by ``u v w`` lines (0-based)."""
    lines = [f"# n={g.n}"]
    if g.node_labels is not None:
        lines.append("# labels=" + ",".join(str(int(x)) for x in g.node_labels))
    if g.graph_label is not None:
        lines.append(f"# graph_label={g.graph_label}")
    lines.extend(f"{u} {v} {w!r}" for u, v, w in g.edges())
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _parse_header(body, lineno, meta):
    key, sep, value = body.partition("=")
    key = key.strip()
    if not sep or key not in ("n", "labels", "graph_label"):
        return
    try:
        if key == "labels":
            meta[key] = [int(x) for x in value.split(",") if x.strip()]
        else:
            meta[key] = int(value)
    except ValueError:
        raise ParseError(f"malformed header value for {key!r}", lineno) from None


def read_edge_list(path):
    """Read a graph written by :func:`write_edge_list`.

    Raises
    ------
    ParseError
        On malformed lines, missing ``n`` header, self-loops, duplicates, or
        non-finite/negative weights (with the offending line number).
    IndexOutOfRange
        If a vertex index is outside ``[0, n)``.
    """
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise MissingFile(f"no such file: {path}") from None
    meta = {}
    edges = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            _parse_header(line[1:], lineno, meta)
            continue
        if "n" not in meta:
            raise ParseError("edge line before the '# n=<count>' header", lineno)
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'u v w', got {line!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(f"cannot parse {line!r}", lineno) from None
        n = meta["n"]
        if not (0 <= u < n and 0 <= v < n):
            raise IndexOutOfRange(f"vertex index out of range [0, {n})", lineno)
        if u == v:
            raise ParseError("self-loops are not allowed", lineno)
        if not math.isfinite(w) or w < 0:
            raise ParseError(f"weight must be finite and non-negative, got {parts[2]}", lineno)
        key = (min(u, v), max(u, v))
        if key in edges:
            raise ParseError(f"duplicate edge {key}", lineno)
        edges[key] = w
    if "n" not in meta:
        raise ParseError("missing '# n=<count>' header", None)
    n = meta["n"]
    if n < 1:
        raise ParseError("n must be positive", None)
    W = np.zeros((n, n))
    for (u, v), w in edges.items():
        W[u, v] = W[v, u] = w
    labels = meta.get("labels")
    if labels is not None and len(labels) != n:
        raise ParseError(f"labels header has {len(labels)} entries, expected {n}", None)
    return Graph(W, node_labels=labels, graph_label=meta.get("graph_label"), name=Path(path).stem)


@dataclass(frozen=True, eq=False)
class GraphCollection:
    graphs: List[Graph]
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.shape != (len(self.graphs),):
            raise ValidationError("need exactly one label per graph")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.graphs)

    def subsample(self, m, seed=0):
        """``m`` graphs drawn without replacement, kept in original order."""
        if not 1 <= m <= len(self):
            raise ValidationError(f"cannot draw {m} graphs from a collection of {len(self)}")
        idx = np.sort(np.random.default_rng(seed).choice(len(self), size=m, replace=False))
        return GraphCollection([self.graphs[i] for i in idx], self.labels[idx], self.name)


def _read_ints(path, width):
    if not path.exists():
        raise MissingFile(f"missing dataset file: {path}")
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != width:
            raise ParseError(f"{path.name}: expected {width} comma-separated values", lineno)
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"{path.name}: cannot parse {line!r}", lineno) from None
        if not all(math.isfinite(x) and x == int(x) for x in vals):
            raise ParseError(f"{path.name}: non-integer value in {line!r}", lineno)
        rows.append([int(x) for x in vals])
    return rows


def read_tu_collection(directory, name):
    """Load a dataset in the TU graph-collection layout.

    Reads ``<name>_A.txt`` (1-based global edge pairs),
    ``<name>_graph_indicator.txt`` and ``<name>_graph_labels.txt``. Edges are
    symmetrised with unit weight, self-loops dropped, node and edge attributes
    ignored, and graph labels renumbered to ``0..K-1`` in sorted order.
    """
    d = Path(directory)
    indicator = np.array([r[0] for r in _read_ints(d / f"{name}_graph_indicator.txt", 1)], dtype=int)
    raw_labels = np.array([r[0] for r in _read_ints(d / f"{name}_graph_labels.txt", 1)], dtype=int)
    edges = _read_ints(d / f"{name}_A.txt", 2)
    n_graphs = raw_labels.size
    if indicator.size == 0 or indicator.min() < 1 or indicator.max() > n_graphs:
        raise InconsistentIndicator("graph indicator refers to graphs outside the label file")
    # local index of each global node inside its graph
    local = np.zeros(indicator.size, dtype=int)
    sizes = np.zeros(n_graphs + 1, dtype=int)
    for node, gid in enumerate(indicator):
        local[node] = sizes[gid]
        sizes[gid] += 1
    weights = [np.zeros((sizes[k], sizes[k])) for k in range(1, n_graphs + 1)]
    for lineno, (u, v) in enumerate(edges, start=1):
        if not (1 <= u <= indicator.size and 1 <= v <= indicator.size):
            raise IndexOutOfRange(f"node id out of range in {name}_A.txt", lineno)
        gu, gv = indicator[u - 1], indicator[v - 1]
        if gu != gv:
            raise InconsistentIndicator(f"edge ({u}, {v}) spans graphs {gu} and {gv}")
        if u == v:
            continue
        W = weights[gu - 1]
        a, b = local[u - 1], local[v - 1]
        W[a, b] = W[b, a] = 1.0
    _, labels = np.unique(raw_labels, return_inverse=True)
    graphs = [
        Graph(W, graph_label=int(lab), name=f"{name}_{k + 1}")
        for k, (W, lab) in enumerate(zip(weights, labels))
    ]
    return GraphCollection(graphs, labels, name)


def _plain(obj):
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_result(result, path):
    """Write a result record as JSON with ``schema_version`` first.

    ``result`` is anything with ``to_dict()`` or a plain mapping; key order
    is preserved so repeated runs produce identical bytes.
    """
    record = {"schema_version": SCHEMA_VERSION}
    record.update(_plain(result))
    try:
        text = json.dumps(record, indent=1, allow_nan=False)
    except ValueError as exc:
        raise IoError(f"result contains non-finite values: {exc}") from exc
    try:
        Path(path).write_text(text + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_result(path):
    try:
        record = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise MissingFile(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid result file: {exc.msg}", exc.lineno) from None
    if record.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {record.get('schema_version')!r}", None)
    return record


def write_table(rows, path, columns=None):
    """Write a list of flat dicts as CSV (plot-ready tables)."""
    if not rows:
        raise ValidationError("no rows to write")
    columns = list(columns or rows[0].keys())
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc

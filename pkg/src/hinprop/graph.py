"""Typed heterogeneous graph with click-weighted relation matrices.

Nodes are grouped by type (users, apps, app categories, ...) and every
declared relation between a pair of types is stored as a sparse nonnegative
integer matrix of click/membership counts.  Both orientations of a relation
are kept and are exact transposes of each other.  Node indices are dense,
assigned in first-seen order, and define the row/column order of every
matrix derived downstream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import GraphError

DEFAULT_SCHEMA_DICT = {
    "node_types": ["U", "A", "T"],
    "relations": [["U", "A"], ["A", "T"], ["U", "T"]],
    "target_type": "U",
    "n_classes": 6,
}


@dataclass(frozen=True)
class Schema:
    """Node type names, allowed relation pairs, target type and class count."""

    node_types: tuple[str, ...]
    relations: frozenset[frozenset[str]]
    target_type: str
    n_classes: int

    def __post_init__(self):
        if len(set(self.node_types)) != len(self.node_types):
            raise GraphError("duplicate node type names in schema")
        if self.target_type not in self.node_types:
            raise GraphError(f"target type {self.target_type!r} not declared")
        if self.n_classes < 2:
            raise GraphError("schema needs at least 2 classes")
        for pair in self.relations:
            for t in pair:
                if t not in self.node_types:
                    raise GraphError(f"relation references unknown type {t!r}")

    def has_relation(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.relations

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        return cls(
            node_types=tuple(d["node_types"]),
            relations=frozenset(frozenset(p) for p in d["relations"]),
            target_type=d["target_type"],
            n_classes=int(d["n_classes"]),
        )

    @classmethod
    def default(cls) -> "Schema":
        return cls.from_dict(DEFAULT_SCHEMA_DICT)

    def to_dict(self) -> dict:
        rels = sorted(sorted(pair) for pair in self.relations)
        return {
            "node_types": list(self.node_types),
            "relations": rels,
            "target_type": self.target_type,
            "n_classes": self.n_classes,
        }


@dataclass
class HinGraph:
    """Immutable typed graph: per-type node indices plus relation matrices.

    ``nodes[t]`` is the ordered list of node ids of type ``t``; position in
    that list is the node's index.  ``relations[(s, d)]`` is a CSR matrix of
    shape (len(nodes[s]), len(nodes[d])) whose entries are positive counts.
    The reverse orientation is always present and is the exact transpose.
    """

    schema: Schema
    nodes: dict[str, list[str]]
    relations: dict[tuple[str, str], sparse.csr_array]
    index: dict[str, tuple[str, int]] = field(repr=False)

    def n_nodes(self, node_type: str) -> int:
        return len(self.nodes[node_type])

    @property
    def target_type(self) -> str:
        return self.schema.target_type

    @property
    def n_target(self) -> int:
        return self.n_nodes(self.schema.target_type)

    def relation_matrix(self, src: str, dst: str) -> sparse.csr_array:
        """Return the stored click-count matrix for the (src, dst) relation.

        The returned matrix is a shared read-only view; callers must not
        mutate it.  Raises GraphError when the pair is not in the schema.
        """
        if not self.schema.has_relation(src, dst):
            raise GraphError(f"no such relation {src}-{dst} in schema")
        return self.relations[(src, dst)]

    def neighbor_types(self, node_type: str) -> list[str]:
        """Types directly linked to ``node_type``, in schema declaration order."""
        return [t for t in self.schema.node_types
                if t != node_type and self.schema.has_relation(node_type, t)]


def build_graph(schema, node_records, edge_records):
    """Assemble a HinGraph and target-type labels from row records.

    Parameters
    ----------
    schema : Schema
    node_records : iterable of (id, type, label)
        ``label`` may be None or "" for unlabeled nodes; otherwise it must be
        an integer class id in 1..n_classes and the node must be of the
        target type.
    edge_records : iterable of (src_id, dst_id, weight)
        ``weight`` must be a positive integer.  Duplicate records for the
        same pair are summed, as click logs naturally aggregate.

    Returns
    -------
    (HinGraph, numpy int array)
        The label array has one entry per target-type node in index order,
        0 for unlabeled.
    """
    nodes: dict[str, list[str]] = {t: [] for t in schema.node_types}
    index: dict[str, tuple[str, int]] = {}
    raw_labels: dict[int, int] = {}

    for rec in node_records:
        node_id, node_type = str(rec[0]), str(rec[1])
        label = rec[2] if len(rec) > 2 else None
        if node_type not in nodes:
            raise GraphError(f"unknown node type {node_type!r} for node {node_id!r}")
        if node_id in index:
            raise GraphError(f"duplicate node id {node_id!r}")
        idx = len(nodes[node_type])
        nodes[node_type].append(node_id)
        index[node_id] = (node_type, idx)
        if label not in (None, ""):
            if node_type != schema.target_type:
                raise GraphError(
                    f"label on non-target node {node_id!r} of type {node_type!r}")
            cls = int(label)
            if not 1 <= cls <= schema.n_classes:
                raise GraphError(
                    f"label {cls} outside 1..{schema.n_classes} on node {node_id!r}")
            raw_labels[idx] = cls

    # Accumulate triplets per canonical orientation, then build CSR once.
    # CSR construction sums duplicate (i, j) entries for us.
    canon: dict[tuple[str, str], tuple[list, list, list]] = {}
    for rec in edge_records:
        src_id, dst_id = str(rec[0]), str(rec[1])
        weight = rec[2]
        if src_id not in index:
            raise GraphError(f"unknown node {src_id!r} in edge record")
        if dst_id not in index:
            raise GraphError(f"unknown node {dst_id!r} in edge record")
        try:
            wf = float(weight)
            w = int(wf)
        except (TypeError, ValueError):
            raise GraphError(
                f"edge ({src_id},{dst_id}) weight {weight!r} is not a positive integer")
        if w != wf or w <= 0:
            raise GraphError(
                f"edge ({src_id},{dst_id}) weight {weight!r} is not a positive integer")
        s_type, s_idx = index[src_id]
        d_type, d_idx = index[dst_id]
        if not schema.has_relation(s_type, d_type):
            raise GraphError(f"no such relation {s_type}-{d_type} in schema")
        key = (s_type, d_type) if s_type <= d_type else (d_type, s_type)
        if key not in canon:
            canon[key] = ([], [], [])
        rows, cols, data = canon[key]
        if (s_type, d_type) == key:
            rows.append(s_idx)
            cols.append(d_idx)
        else:
            rows.append(d_idx)
            cols.append(s_idx)
        data.append(w)

    relations: dict[tuple[str, str], sparse.csr_array] = {}
    for pair in schema.relations:
        a, b = sorted(pair)
        shape = (len(nodes[a]), len(nodes[b]))
        if (a, b) in canon:
            rows, cols, data = canon[(a, b)]
            mat = sparse.coo_array(
                (np.asarray(data, dtype=np.int64),
                 (np.asarray(rows), np.asarray(cols))),
                shape=shape).tocsr()
            mat.sum_duplicates()
        else:
            mat = sparse.csr_array(shape, dtype=np.int64)
        mat_t = mat.T.tocsr()
        _freeze(mat)
        _freeze(mat_t)
        relations[(a, b)] = mat
        relations[(b, a)] = mat_t

    labels = np.zeros(len(nodes[schema.target_type]), dtype=np.int64)
    for idx, cls in raw_labels.items():
        labels[idx] = cls
    return HinGraph(schema=schema, nodes=nodes, relations=relations, index=index), labels


def _freeze(mat: sparse.csr_array) -> None:
    for arr in (mat.data, mat.indices, mat.indptr):
        arr.setflags(write=False)


def load_schema(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        return Schema.from_dict(json.load(fh))


def save_schema(schema: Schema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(data_dir):
    """Load schema.json, nodes.csv and edges.csv from a directory.

    Returns (HinGraph, labels).  When the directory also contains truth.csv
    (written by the synthetic generator) its labels take precedence, since
    nodes.csv may deliberately hide labels from the pipeline.
    """
    data_dir = Path(data_dir)
    schema = load_schema(data_dir / "schema.json")
    node_records = []
    with open(data_dir / "nodes.csv", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            node_records.append((row["id"], row["type"], row.get("label") or None))
    edge_records = []
    with open(data_dir / "edges.csv", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            edge_records.append((row["src"], row["dst"], int(row["weight"])))
    graph, labels = build_graph(schema, node_records, edge_records)

    truth_path = data_dir / "truth.csv"
    if truth_path.exists():
        labels = load_labels(truth_path, graph)
    return graph, labels


def load_labels(path, graph: HinGraph) -> np.ndarray:
    """Read an ``id,label`` CSV into a label array over target-type nodes."""
    labels = np.zeros(graph.n_target, dtype=np.int64)
    target = graph.target_type
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            node_id = row["id"]
            if node_id not in graph.index:
                raise GraphError(f"unknown node {node_id!r} in {path}")
            node_type, idx = graph.index[node_id]
            if node_type != target:
                raise GraphError(f"label on non-target node {node_id!r}")
            cls = int(row["label"])
            if not 1 <= cls <= graph.schema.n_classes:
                raise GraphError(f"label {cls} out of range for node {node_id!r}")
            labels[idx] = cls
    return labels


def save_dataset(graph: HinGraph, labels, data_dir, truth=None) -> None:
    """Write schema.json, nodes.csv, edges.csv (and optionally truth.csv).

    Output is canonical: nodes in index order grouped by schema type order,
    edges grouped per relation in CSR row-major order, so identical graphs
    serialize to identical bytes.
    """
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    save_schema(graph.schema, data_dir / "schema.json")

    target = graph.target_type
    with open(data_dir / "nodes.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "type", "label"])
        for node_type in graph.schema.node_types:
            ids = graph.nodes[node_type]
            for idx, node_id in enumerate(ids):
                label = ""
                if node_type == target and labels is not None and labels[idx] > 0:
                    label = str(int(labels[idx]))
                writer.writerow([node_id, node_type, label])

    seen = set()
    with open(data_dir / "edges.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "weight"])
        for pair in sorted(sorted(p) for p in graph.schema.relations):
            a, b = pair
            if (a, b) in seen:
                continue
            seen.add((a, b))
            mat = graph.relations[(a, b)].tocoo()
            src_ids, dst_ids = graph.nodes[a], graph.nodes[b]
            order = np.lexsort((mat.coords[1], mat.coords[0]))
            for k in order:
                i, j = mat.coords[0][k], mat.coords[1][k]
                writer.writerow([src_ids[i], dst_ids[j], int(mat.data[k])])

    if truth is not None:
        with open(data_dir / "truth.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "label"])
            for idx, node_id in enumerate(graph.nodes[target]):
                if truth[idx] > 0:
                    writer.writerow([node_id, int(truth[idx])])

"""Meta-path parsing, commuting matrices and PathSim similarity.

A meta-path is a sequence of node types whose consecutive pairs are schema
relations, starting and ending at the target type.  Its commuting matrix is
the product of the relation matrices along the sequence; entry (i, j) counts
weighted path instances from target node i to target node j.  PathSim
normalizes that count by the self-instance counts:

    s(i, j) = 2 * M(i, j) / (M(i, i) + M(j, j))

with s(i, j) = 0 when the denominator is zero.  Commuting matrices are
computed exactly (no sampling); palindromic paths are evaluated as H @ H.T
where H is the half product, which guarantees symmetry and halves the work.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import GraphError
from .graph import HinGraph

DEFAULT_METAPATHS = ["U-A-U", "U-T-U", "U-A-T-A-U", "U-T-A-T-U"]

# Half-product factors denser than this are stored as plain ndarrays; sparse
# row slicing on nearly-dense factors is slower than BLAS.
_FACTOR_DENSITY_CUTOFF = 0.25


@dataclass(frozen=True)
class MetaPath:
    """A validated type sequence, e.g. ("U", "A", "T", "A", "U")."""

    types: tuple[str, ...]

    @property
    def name(self) -> str:
        return "-".join(self.types)

    def __len__(self) -> int:
        return len(self.types)

    @property
    def palindromic(self) -> bool:
        return self.types == self.types[::-1]


def parse_metapath(text: str, graph: HinGraph) -> MetaPath:
    """Parse a dash-separated type string into a schema-checked MetaPath.

    Raises GraphError for unknown type tokens, consecutive pairs that are not
    schema relations, or endpoints other than the target type.
    """
    if not text or not text.strip():
        raise GraphError("empty meta-path")
    tokens = tuple(tok.strip() for tok in text.split("-"))
    schema = graph.schema
    for tok in tokens:
        if tok not in schema.node_types:
            raise GraphError(f"unknown type token {tok!r} in meta-path {text!r}")
    target = schema.target_type
    if tokens[0] != target or tokens[-1] != target:
        raise GraphError(
            f"meta-path {text!r} must start and end at target type {target!r}")
    for a, b in zip(tokens, tokens[1:]):
        if not schema.has_relation(a, b):
            raise GraphError(f"no schema relation {a}-{b} in meta-path {text!r}")
    if len(tokens) < 3:
        raise GraphError(f"meta-path {text!r} must have length >= 3")
    return MetaPath(types=tokens)


def _chain_product(graph: HinGraph, types: tuple[str, ...]) -> sparse.csr_array:
    """Left-to-right product of the relation matrices along a type chain."""
    out = graph.relation_matrix(types[0], types[1])
    for a, b in zip(types[1:], types[2:]):
        out = out @ graph.relation_matrix(a, b)
    return sparse.csr_array(out)


def commuting_matrix(graph: HinGraph, path) -> np.ndarray:
    """Exact weighted path-instance count matrix over target-type nodes.

    Entry (i, j) equals the sum over all concrete node sequences following
    the path of the product of edge weights along the sequence.  Integer
    relation matrices give exact integer entries (int64 arithmetic
    throughout).  Returns a dense (n_target, n_target) array.
    """
    if isinstance(path, str):
        path = parse_metapath(path, graph)
    if path.palindromic and len(path) % 2 == 1:
        # Odd-length palindrome: the product is H @ H.T for the half chain,
        # which is symmetric by construction and halves the multiplications.
        half = path.types[: len(path) // 2 + 1]
        h = _chain_product(graph, half)
        m = (h @ h.T).toarray()
    else:
        m = _chain_product(graph, path.types).toarray()
    return m


def pathsim(m: np.ndarray) -> np.ndarray:
    """PathSim similarity s(i,j) = 2 M(i,j) / (M(i,i) + M(j,j)).

    Requires a symmetric input (palindromic path); pairs whose denominator
    is zero get similarity 0, so nodes without any path instance are
    maximally dissimilar.  All outputs lie in [0, 1] and the diagonal is 1
    wherever M(i,i) > 0.
    """
    m = np.asarray(m)
    if m.shape[0] != m.shape[1] or not _symmetric(m):
        raise GraphError("pathsim requires palindromic path (symmetric matrix)")
    diag = np.asarray(m.diagonal(), dtype=np.float64)
    denom = diag[:, None] + diag[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 0, 2.0 * m / denom, 0.0)
    return s


def _symmetric(m: np.ndarray) -> bool:
    if m.dtype.kind in "iu":
        return bool(np.array_equal(m, m.T))
    return bool(np.allclose(m, m.T, rtol=1e-10, atol=1e-12))


class PathFactor:
    """Half-product factor of a palindromic path, for lazy PathSim access.

    Stores H with M = H @ H.T, plus the self-instance diagonal, so that
    PathSim entries for arbitrary pairs, full PathSim rows, and PathSim
    row sums can be produced in blocks without ever materializing the whole
    n x n matrix.  Exactly the same formulas as `commuting_matrix` followed
    by `pathsim`, evaluated lazily.
    """

    def __init__(self, path: MetaPath, graph: HinGraph):
        if not (path.palindromic and len(path) % 2 == 1):
            raise GraphError(f"path {path.name!r} is not an odd-length palindrome")
        self.path = path
        half = path.types[: len(path) // 2 + 1]
        h = _chain_product(graph, half).astype(np.float64)
        density = h.nnz / max(1, h.shape[0] * h.shape[1])
        if density > _FACTOR_DENSITY_CUTOFF:
            self.h = np.ascontiguousarray(h.toarray())
            self.h_t = self.h.T
            self._sparse = False
        else:
            self.h = h
            self.h_t = h.T.tocsr()
            self._sparse = True
        self.inner_dim = h.shape[1]
        self.n = h.shape[0]
        if self._sparse:
            diag = np.asarray(self.h.multiply(self.h).sum(axis=1)).ravel()
        else:
            diag = np.einsum("ij,ij->i", self.h, self.h)
        self.diag = diag

    def rows(self, start: int, stop: int) -> np.ndarray:
        """Dense PathSim rows for target nodes start..stop-1."""
        block = self.h[start:stop]
        if self._sparse:
            m = (block @ self.h_t).toarray()
        else:
            m = block @ self.h_t
        denom = self.diag[start:stop, None] + self.diag[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(denom > 0, 2.0 * m / denom, 0.0)

    def pair_values(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """PathSim values for node index pairs (i[k], j[k])."""
        i = np.asarray(i)
        j = np.asarray(j)
        if self._sparse:
            hi = self.h[i]
            hj = self.h[j]
            m = np.asarray(hi.multiply(hj).sum(axis=1)).ravel()
        else:
            m = np.einsum("ij,ij->i", self.h[i], self.h[j])
        denom = self.diag[i] + self.diag[j]
        out = np.zeros(len(m), dtype=np.float64)
        nz = denom > 0
        out[nz] = 2.0 * m[nz] / denom[nz]
        return out

    def pathsim_matrix(self, block_rows: int = 2048,
                       out: np.ndarray | None = None) -> np.ndarray:
        """Materialize the full PathSim matrix block by block."""
        if out is None:
            out = np.empty((self.n, self.n), dtype=np.float64)
        for start in range(0, self.n, block_rows):
            stop = min(start + block_rows, self.n)
            out[start:stop] = self.rows(start, stop)
        return out

    def pathsim_row_sums(self, block_rows: int = 2048) -> np.ndarray:
        """Row sums of the PathSim matrix, computed block by block."""
        sums = np.empty(self.n, dtype=np.float64)
        for start in range(0, self.n, block_rows):
            stop = min(start + block_rows, self.n)
            sums[start:stop] = self.rows(start, stop).sum(axis=1)
        return sums


def pathsim_pair_values(source, i, j) -> np.ndarray:
    """PathSim entries for index pairs, from an ndarray or a PathFactor."""
    if isinstance(source, PathFactor):
        return source.pair_values(i, j)
    arr = np.asarray(source)
    return arr[np.asarray(i), np.asarray(j)].astype(np.float64)


def dump_pathsim(matrix: np.ndarray, path_name: str, out_dir) -> str:
    """Write a PathSim matrix as pathsim_<name>.csv, dense, 6 decimals."""
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"pathsim_{path_name}.csv"
    np.savetxt(out_path, np.asarray(matrix), fmt="%.6f", delimiter=",")
    return str(out_path)

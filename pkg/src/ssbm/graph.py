"""Simple directed/undirected graphs with edge-list file I/O."""

from __future__ import annotations

import numpy as np

__all__ = ["Graph", "EdgeListError", "load_edge_list", "save_edge_list"]


class EdgeListError(ValueError):
    """Malformed edge input: bad tokens, negative ids, or self-loops."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


def _csr(num_vertices: int, src: np.ndarray, dst: np.ndarray):
    order = np.argsort(src, kind="stable")
    indices = dst[order]
    indptr = np.zeros(num_vertices + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_vertices), out=indptr[1:])
    return indptr, indices


class Graph:
    """Immutable simple graph stored in CSR form for O(deg) neighbor iteration.

    Undirected edges are stored once logically (canonical u < v pairs in
    ``edge_array``) but appear in both endpoints' neighbor lists. Directed
    graphs additionally keep an "incident" list per vertex combining out- and
    in-edges, which move proposals iterate over.
    """

    def __init__(self, edges: np.ndarray, num_vertices: int, directed: bool,
                 original_ids=None):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and edges.min() < 0:
            raise EdgeListError("negative vertex id")
        if edges.size and (edges[:, 0] == edges[:, 1]).any():
            raise EdgeListError("self-loops are not allowed")
        if not directed and edges.size:
            edges = np.sort(edges, axis=1)
        if edges.size:
            edges = np.unique(edges, axis=0)
            if num_vertices <= int(edges.max()):
                raise EdgeListError("vertex id exceeds num_vertices")
        self.directed = bool(directed)
        self.num_vertices = int(num_vertices)
        self.num_edges = int(edges.shape[0])
        self.edge_array = edges
        # populated by load_edge_list(remap_ids=True): original_ids[i] is the
        # input token that became internal vertex i
        self.original_ids = original_ids

        u, v = edges[:, 0], edges[:, 1]
        if directed:
            self._out = _csr(num_vertices, u, v)
            self._in = _csr(num_vertices, v, u)
            self._inc = _csr(num_vertices, np.concatenate([u, v]), np.concatenate([v, u]))
        else:
            adj = _csr(num_vertices, np.concatenate([u, v]), np.concatenate([v, u]))
            self._out = self._in = self._inc = adj

    @classmethod
    def from_edges(cls, edges, directed: bool, num_vertices: int | None = None) -> "Graph":
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if num_vertices is None:
            num_vertices = int(arr.max()) + 1 if arr.size else 0
        return cls(arr, num_vertices, directed)

    def out_neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self._out
        return indices[indptr[v]:indptr[v + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self._in
        return indices[indptr[v]:indptr[v + 1]]

    def incident(self, v: int) -> np.ndarray:
        """Other endpoints of every edge incident on v (each edge once)."""
        indptr, indices = self._inc
        return indices[indptr[v]:indptr[v + 1]]

    def degree(self, v: int) -> int:
        indptr, _ = self._inc
        return int(indptr[v + 1] - indptr[v])

    def __repr__(self):  # pragma: no cover
        kind = "directed" if self.directed else "undirected"
        return f"Graph({kind}, N={self.num_vertices}, M={self.num_edges})"


def load_edge_list(path, directed: bool, num_vertices: int | None = None,
                   remap_ids: bool = False) -> Graph:
    """Read a whitespace-separated "u v" edge list; '#' lines are comments.

    Vertex count defaults to 1 + the largest id seen; pass ``num_vertices`` to
    force trailing isolated vertices. Duplicate edges are collapsed and
    self-loops rejected. With ``remap_ids`` the tokens may be arbitrary
    (sparse integers, strings); they are mapped to dense ids in order of
    first appearance and the originals kept on ``Graph.original_ids``.
    """
    src, dst = [], []
    ids: dict[str, int] = {}

    def resolve(token: str, lineno: int) -> int:
        if remap_ids:
            if token not in ids:
                ids[token] = len(ids)
            return ids[token]
        try:
            value = int(token)
        except ValueError:
            raise EdgeListError(f"non-integer vertex id {token!r}", lineno) from None
        if value < 0:
            raise EdgeListError("negative vertex id", lineno)
        return value

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListError(f"expected 'u v', got {line!r}", lineno)
            u = resolve(parts[0], lineno)
            v = resolve(parts[1], lineno)
            if u == v:
                raise EdgeListError(f"self-loop on vertex {parts[0]}", lineno)
            src.append(u)
            dst.append(v)
    edges = np.column_stack([src, dst]).astype(np.int64) if src else np.empty((0, 2), np.int64)
    top = int(edges.max()) + 1 if edges.size else 0
    if num_vertices is None:
        num_vertices = top
    elif num_vertices < top:
        raise EdgeListError(f"num_vertices={num_vertices} below largest id {top - 1}")
    original = list(ids) if remap_ids else None
    return Graph(edges, num_vertices, directed, original_ids=original)


def save_edge_list(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# vertices {graph.num_vertices}\n")
        for u, v in graph.edge_array:
            fh.write(f"{u} {v}\n")

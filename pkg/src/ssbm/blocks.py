"""Vertex partitions, block-pair edge counts, and shared-block alignments.

Block labels are 0-based internally and 1-based in file formats. For
undirected graphs the count matrix C is kept fully symmetric with the
diagonal counting each within-block edge once; the i <= j triangle is the
authoritative data and the lower triangle mirrors it.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph

__all__ = [
    "Partition",
    "BlockCounts",
    "SharedMapping",
    "InfeasibleSharedError",
    "compute_block_counts",
    "move_vertex",
    "dyad_matrix",
    "save_partition",
    "load_partition",
    "save_mapping",
    "load_mapping",
]


class InfeasibleSharedError(ValueError):
    """Requested number of shared blocks exceeds min_k B_k."""


class Partition:
    """Assignment of each vertex to one of ``num_blocks`` labels.

    Empty blocks are legal (moves may vacate a block); ``num_blocks`` stays
    fixed for the lifetime of a fit.
    """

    __slots__ = ("num_blocks", "assignment", "block_sizes", "graph_id")

    def __init__(self, assignment, num_blocks: int | None = None, graph_id: int = 0):
        assignment = np.array(assignment, dtype=np.int64)
        if assignment.ndim != 1:
            raise ValueError("assignment must be a 1-d label vector")
        if num_blocks is None:
            num_blocks = int(assignment.max()) + 1 if assignment.size else 0
        if assignment.size and (assignment.min() < 0 or assignment.max() >= num_blocks):
            raise ValueError("block label out of range")
        self.num_blocks = int(num_blocks)
        self.assignment = assignment
        self.block_sizes = np.bincount(assignment, minlength=num_blocks).astype(np.int64)
        self.graph_id = graph_id

    @property
    def num_vertices(self) -> int:
        return self.assignment.shape[0]

    def copy(self) -> "Partition":
        return Partition(self.assignment.copy(), self.num_blocks, self.graph_id)

    def relabel(self, perm) -> "Partition":
        """Return a copy with labels renamed by ``perm`` (perm[old] = new)."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.num_blocks)):
            raise ValueError("perm must be a permutation of the block labels")
        return Partition(perm[self.assignment], self.num_blocks, self.graph_id)

    def __repr__(self):  # pragma: no cover
        return f"Partition(N={self.num_vertices}, B={self.num_blocks})"


def dyad_matrix(block_sizes: np.ndarray, directed: bool) -> np.ndarray:
    """Number of possible dyads per block pair, from block sizes alone."""
    n = np.asarray(block_sizes, dtype=np.int64)
    d = np.outer(n, n)
    if directed:
        np.fill_diagonal(d, n * (n - 1))
    else:
        np.fill_diagonal(d, n * (n - 1) // 2)
    return d


class BlockCounts:
    """Edge counts C per block pair plus derived non-edge counts F and dyads.

    ``block_sizes`` aliases the owning partition's array so that
    :func:`move_vertex` keeps both in sync with O(deg + B) work. Row/column
    sums of C are cached for O(1) block-degree lookups; mutate C only through
    :func:`move_vertex` to keep them valid.
    """

    __slots__ = ("C", "block_sizes", "directed", "_row_sum", "_col_sum")

    def __init__(self, C: np.ndarray, block_sizes: np.ndarray, directed: bool):
        self.C = np.asarray(C, dtype=np.int64)
        self.block_sizes = block_sizes
        self.directed = bool(directed)
        self._row_sum = self.C.sum(axis=1)
        self._col_sum = self.C.sum(axis=0) if directed else self._row_sum

    @property
    def num_blocks(self) -> int:
        return self.C.shape[0]

    @property
    def dyads(self) -> np.ndarray:
        return dyad_matrix(self.block_sizes, self.directed)

    @property
    def F(self) -> np.ndarray:
        return self.dyads - self.C

    def edge_totals(self, blocks) -> np.ndarray:
        """Edges incident on each given block, both directions combined."""
        if self.directed:
            return self._row_sum[blocks] + self._col_sum[blocks] - self.C[blocks, blocks]
        return self._row_sum[blocks]

    def total_edges(self) -> int:
        if self.directed:
            return int(self.C.sum())
        return int(np.triu(self.C).sum())

    def copy(self) -> "BlockCounts":
        return BlockCounts(self.C.copy(), self.block_sizes.copy(), self.directed)


def compute_block_counts(graph: Graph, partition: Partition) -> BlockCounts:
    """Tally C from scratch in O(M + B^2)."""
    if partition.num_vertices != graph.num_vertices:
        raise ValueError("partition length does not match graph")
    b = partition.assignment
    B = partition.num_blocks
    C = np.zeros((B, B), dtype=np.int64)
    if graph.num_edges:
        bu = b[graph.edge_array[:, 0]]
        bv = b[graph.edge_array[:, 1]]
        if graph.directed:
            np.add.at(C, (bu, bv), 1)
        else:
            np.add.at(C, (bu, bv), 1)
            np.add.at(C, (bv, bu), 1)
            # within-block edges were added twice
            diag = np.diag_indices(B)
            C[diag] //= 2
    return BlockCounts(C, partition.block_sizes, graph.directed)


def _shift_counts(partition: Partition, counts: BlockCounts, v: int, r: int, to: int,
                  out_cnt: np.ndarray, in_cnt: np.ndarray | None) -> None:
    """Apply the count algebra for moving v from r to ``to``.

    ``out_cnt``/``in_cnt`` tally v's neighbors by block; they stay valid for
    the reverse move because v is never its own neighbor. ``in_cnt`` is None
    for undirected graphs, where ``out_cnt`` covers all incident edges.
    """
    C = counts.C
    if in_cnt is not None:
        C[r, :] -= out_cnt
        C[to, :] += out_cnt
        C[:, r] -= in_cnt
        C[:, to] += in_cnt
        out_total, in_total = out_cnt.sum(), in_cnt.sum()
        counts._row_sum[r] -= out_total
        counts._row_sum[to] += out_total
        counts._col_sum[r] -= in_total
        counts._col_sum[to] += in_total
    else:
        cnt = out_cnt
        C[r, :] -= cnt
        C[:, r] -= cnt
        C[r, r] += cnt[r]  # diagonal was double-subtracted
        C[to, :] += cnt
        C[:, to] += cnt
        C[to, to] -= cnt[to]
        total = cnt.sum()
        counts._row_sum[r] += cnt[r] - total
        counts._row_sum[to] += total - cnt[to]
    partition.assignment[v] = to
    partition.block_sizes[r] -= 1
    partition.block_sizes[to] += 1


def move_vertex(graph: Graph, partition: Partition, counts: BlockCounts, v: int, to: int) -> None:
    """Reassign vertex v to block ``to``, updating sizes and C in place."""
    B = partition.num_blocks
    if not 0 <= to < B:
        raise ValueError(f"target block {to} out of range [0, {B})")
    r = int(partition.assignment[v])
    if r == to:
        return
    if graph.directed:
        out_cnt = np.bincount(partition.assignment[graph.out_neighbors(v)], minlength=B)
        in_cnt = np.bincount(partition.assignment[graph.in_neighbors(v)], minlength=B)
    else:
        out_cnt = np.bincount(partition.assignment[graph.incident(v)], minlength=B)
        in_cnt = None
    _shift_counts(partition, counts, v, r, to, out_cnt, in_cnt)


class SharedMapping:
    """Injective alignments sigma_k: [s] -> [B_k] naming each graph's shared blocks."""

    __slots__ = ("num_shared", "maps")

    def __init__(self, maps):
        maps = [np.asarray(m, dtype=np.int64) for m in maps]
        s = maps[0].shape[0] if maps else 0
        for m in maps:
            if m.shape != (s,):
                raise ValueError("all alignment vectors must have length s")
            if len(set(m.tolist())) != s:
                raise ValueError("alignment vectors must be injective")
        self.num_shared = s
        self.maps = maps

    @classmethod
    def identity(cls, num_graphs: int, num_shared: int) -> "SharedMapping":
        return cls([np.arange(num_shared, dtype=np.int64) for _ in range(num_graphs)])

    @property
    def num_graphs(self) -> int:
        return len(self.maps)

    def validate(self, num_blocks_per_graph) -> None:
        Bs = list(num_blocks_per_graph)
        if len(Bs) != len(self.maps):
            raise ValueError("mapping covers a different number of graphs")
        if self.num_shared > (min(Bs) if Bs else 0) and self.num_shared > 0:
            raise InfeasibleSharedError(
                f"s={self.num_shared} exceeds the smallest block count {min(Bs)}"
            )
        for m, B in zip(self.maps, Bs):
            if m.size and (m.min() < 0 or m.max() >= B):
                raise ValueError("alignment refers to a block out of range")

    def shared_sets(self) -> list[set]:
        return [set(m.tolist()) for m in self.maps]

    def __eq__(self, other):
        return (
            isinstance(other, SharedMapping)
            and self.num_shared == other.num_shared
            and all(np.array_equal(a, b) for a, b in zip(self.maps, other.maps))
        )

    def __repr__(self):  # pragma: no cover
        return f"SharedMapping(s={self.num_shared}, maps={[m.tolist() for m in self.maps]})"


# ---------------------------------------------------------------------------
# text formats (1-based labels on disk)

def save_partition(partition: Partition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# blocks {partition.num_blocks}\n")
        for v, b in enumerate(partition.assignment):
            fh.write(f"{v} {b + 1}\n")


def load_partition(path, num_blocks: int | None = None) -> Partition:
    labels = {}
    header_blocks = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "blocks":
                    header_blocks = int(parts[1])
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 'vertex block'")
            labels[int(parts[0])] = int(parts[1]) - 1
    if not labels:
        raise ValueError(f"{path}: empty partition file")
    n = max(labels) + 1
    if len(labels) != n:
        raise ValueError(f"{path}: missing vertex lines (got {len(labels)} of {n})")
    assignment = np.array([labels[v] for v in range(n)], dtype=np.int64)
    if num_blocks is None:
        num_blocks = header_blocks if header_blocks is not None else int(assignment.max()) + 1
    return Partition(assignment, num_blocks)


def save_mapping(mapping: SharedMapping, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# shared {mapping.num_shared}\n")
        for k, m in enumerate(mapping.maps, start=1):
            cols = " ".join(str(b + 1) for b in m)
            fh.write(f"{k}: {cols}\n".rstrip() + "\n")


def load_mapping(path) -> SharedMapping:
    rows = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, _, rest = line.partition(":")
            blocks = [int(tok) - 1 for tok in rest.split()]
            rows[int(head)] = blocks
    maps = [np.array(rows[k], dtype=np.int64) for k in sorted(rows)]
    return SharedMapping(maps)

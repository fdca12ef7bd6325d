"""Bernoulli block-model likelihoods, pooled shared parameters, move deltas, BIC.

Conventions used throughout: 0*log(0) := 0, maximum-likelihood edge
probabilities are C/(C+F) with 0 when a pair has no dyads, and undirected
sums run over block pairs i <= j while directed sums run over all ordered
pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .blocks import (
    BlockCounts,
    Partition,
    SharedMapping,
    InfeasibleSharedError,
    compute_block_counts,
    move_vertex,
)
from .graph import Graph

__all__ = [
    "ThetaMatrix",
    "ModelScore",
    "mle_theta",
    "shared_theta",
    "log_likelihood",
    "mle_log_likelihood",
    "shared_log_likelihood",
    "theta_matrices",
    "bic",
    "SharedState",
    "delta_log_likelihood_move",
]


def mle_theta(c: float, f: float) -> float:
    """Maximum-likelihood edge probability for one block pair."""
    total = c + f
    return c / total if total > 0 else 0.0


def shared_theta(counts) -> float:
    """Pooled maximum-likelihood probability over (C, F) pairs from n graphs."""
    num = sum(c for c, _ in counts)
    den = sum(c + f for c, f in counts)
    return num / den if den > 0 else 0.0


def _theta_of(C, F):
    total = C + F
    out = np.zeros(np.broadcast(C, F).shape, dtype=float)
    np.divide(C, total, out=out, where=total > 0)
    return out


_XLOGX_CAP = 1 << 23  # max lookup-table entries (~64 MB)


class _XlogX:
    """Cached table of m*log(m) over small nonnegative integers.

    Every maximum-likelihood term is a combination of x*log(x) values at
    integer counts, so a gather from this table replaces three transcendental
    evaluations in the hot paths. Falls back to direct evaluation whenever a
    value exceeds the table.
    """

    def __init__(self):
        self.table = np.zeros(1)

    def ensure(self, limit: int) -> None:
        if limit < self.table.size or limit + 1 > _XLOGX_CAP:
            return
        m = np.arange(limit + 1, dtype=float)
        self.table = xlogy(m, m)


_XLOGX = _XlogX()


def _mle_terms(C, F):
    """Elementwise C*log(t) + F*log(1-t) at the plug-in t = C/(C+F).

    Written as xlogy(C,C) + xlogy(F,F) - xlogy(C+F,C+F), which needs no
    division and is exact at the 0*log(0) := 0 corner cases. Integer counts
    within the cached range resolve via table lookup.
    """
    total = C + F
    if isinstance(total, np.ndarray) and total.dtype.kind in "iu" and total.size:
        tab = _XLOGX.table
        if int(total.max()) < tab.size:
            return tab[C] + tab[F] - tab[total]
    return xlogy(C, C) + xlogy(F, F) - xlogy(total, total)


def _terms_at(C, F, theta):
    """Elementwise C*log(theta) + F*log(1-theta); -inf where impossible."""
    return xlogy(C, theta) + xlogy(F, 1.0 - theta)


def _pair_sum(matrix: np.ndarray, directed: bool) -> float:
    if directed:
        return float(matrix.sum())
    iu = np.triu_indices(matrix.shape[0])
    return float(matrix[iu].sum())


@dataclass
class ThetaMatrix:
    """Block-pair edge probabilities; symmetric for undirected graphs."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size and (self.values.min() < 0 or self.values.max() > 1):
            raise ValueError("probabilities must lie in [0, 1]")

    @property
    def num_blocks(self) -> int:
        return self.values.shape[0]


@dataclass
class ModelScore:
    log_likelihood: float
    num_parameters: int
    num_dyads: int
    bic: float = field(init=False)

    def __post_init__(self):
        self.bic = self.num_parameters * math.log(self.num_dyads) - 2.0 * self.log_likelihood


def log_likelihood(counts: BlockCounts, theta) -> float:
    """Log-likelihood of the counts under an explicit probability matrix.

    Returns -inf when some pair has theta=0 with edges present (or theta=1
    with non-edges present).
    """
    values = theta.values if isinstance(theta, ThetaMatrix) else np.asarray(theta, dtype=float)
    if values.shape != counts.C.shape:
        raise ValueError("theta shape does not match counts")
    return _pair_sum(_terms_at(counts.C, counts.F, values), counts.directed)


def mle_log_likelihood(counts: BlockCounts) -> float:
    """Log-likelihood at the per-graph maximum-likelihood parameters."""
    return _pair_sum(_mle_terms(counts.C, counts.F), counts.directed)


def _sub_square(M: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return M[np.ix_(idx, idx)]


def shared_log_likelihood(all_counts, mapping: SharedMapping) -> float:
    """Total log-likelihood over n graphs with pooled parameters on shared pairs.

    Block pairs whose blocks are both shared use the pooled estimate across
    graphs; every other pair uses its own graph's estimate.
    """
    counts = list(all_counts)
    mapping.validate([c.num_blocks for c in counts])
    directed = counts[0].directed
    if any(c.directed != directed for c in counts):
        raise ValueError("graphs must share directedness")
    total = sum(mle_log_likelihood(c) for c in counts)
    s = mapping.num_shared
    if s == 0:
        return total
    pool_c = np.zeros((s, s), dtype=np.int64)
    pool_f = np.zeros((s, s), dtype=np.int64)
    for c, sigma in zip(counts, mapping.maps):
        sub_c = _sub_square(c.C, sigma)
        sub_f = _sub_square(c.F, sigma)
        pool_c += sub_c
        pool_f += sub_f
        total -= _pair_sum(_mle_terms(sub_c, sub_f), directed)
    total += _pair_sum(_mle_terms(pool_c, pool_f), directed)
    return total


def theta_matrices(all_counts, mapping: SharedMapping) -> list[ThetaMatrix]:
    """Per-graph MLE matrices with shared pairs overwritten by pooled values."""
    counts = list(all_counts)
    thetas = [_theta_of(c.C, c.F) for c in counts]
    s = mapping.num_shared
    if s:
        pool_c = sum(_sub_square(c.C, m) for c, m in zip(counts, mapping.maps))
        pool_f = sum(_sub_square(c.F, m) for c, m in zip(counts, mapping.maps))
        pooled = _theta_of(pool_c, pool_f)
        for th, sigma in zip(thetas, mapping.maps):
            th[np.ix_(sigma, sigma)] = pooled
    return [ThetaMatrix(t) for t in thetas]


def parameter_count(num_blocks: int, directed: bool) -> int:
    return num_blocks * num_blocks if directed else num_blocks * (num_blocks + 1) // 2


def bic(all_counts, mapping: SharedMapping) -> ModelScore:
    """BIC = k*ln(dyads) - 2*LLH, counting only probability parameters.

    Sharing s blocks removes (n-1) copies of the s-block parameter matrix.
    """
    counts = list(all_counts)
    directed = counts[0].directed
    llh = shared_log_likelihood(counts, mapping)
    n = len(counts)
    params = sum(parameter_count(c.num_blocks, directed) for c in counts)
    params -= (n - 1) * parameter_count(mapping.num_shared, directed)
    dyads = 0
    for c in counts:
        nv = int(c.block_sizes.sum())
        dyads += nv * (nv - 1) if directed else nv * (nv - 1) // 2
    return ModelScore(llh, params, dyads)


class SharedState:
    """Mutable joint state for n graphs whose first ``num_shared`` blocks pool counts.

    This is the bookkeeping behind single-vertex move deltas: per-graph count
    matrices are updated incrementally while pooled counts for the shared
    prefix are re-read on demand, giving O(deg(v) + n*B) per move. Single
    writer; one fitting chain owns one state.
    """

    def __init__(self, graphs, partitions, num_shared: int, counts=None):
        self.graphs: list[Graph] = list(graphs)
        self.partitions: list[Partition] = list(partitions)
        directed = self.graphs[0].directed
        if any(g.directed != directed for g in self.graphs):
            raise ValueError("graphs must share directedness")
        Bs = [p.num_blocks for p in self.partitions]
        if num_shared > min(Bs):
            raise InfeasibleSharedError(f"s={num_shared} exceeds min block count {min(Bs)}")
        self.directed = directed
        self.num_shared = int(num_shared)
        if counts is None:
            counts = [compute_block_counts(g, p) for g, p in zip(self.graphs, self.partitions)]
        self.counts: list[BlockCounts] = list(counts)
        _XLOGX.ensure(sum(g.num_vertices * max(g.num_vertices - 1, 1) for g in self.graphs))

    @property
    def num_graphs(self) -> int:
        return len(self.graphs)

    def mapping(self) -> SharedMapping:
        return SharedMapping.identity(self.num_graphs, self.num_shared)

    def log_likelihood(self) -> float:
        return shared_log_likelihood(self.counts, self.mapping())

    def copy_partitions(self) -> list[Partition]:
        return [p.copy() for p in self.partitions]

    # -- local term evaluation over pairs touched by a move ----------------

    def _pooled_local(self, shared_pos: list[int], r: int, t: int) -> float:
        """Pooled terms over shared positions paired with position r or t."""
        s = self.num_shared
        m = len(shared_pos)
        rows_c = np.zeros((m, s), dtype=np.int64)
        rows_d = np.zeros((m, s), dtype=np.int64)
        if self.directed:
            cols_c = np.zeros((m, s), dtype=np.int64)
        for c in self.counts:
            n = c.block_sizes
            rows_c += c.C[shared_pos, :s]
            dr = n[shared_pos, None] * n[None, :s]
            for i, p in enumerate(shared_pos):
                dr[i, p] = n[p] * (n[p] - 1) if self.directed else n[p] * (n[p] - 1) // 2
            rows_d += dr
            if self.directed:
                cols_c += c.C[:s, shared_pos].T
        qrow = _mle_terms(rows_c, rows_d - rows_c)
        if self.directed:
            qcol = _mle_terms(cols_c, rows_d - cols_c)  # dyads are symmetric
            total = qrow.sum() + qcol.sum()
            if m == 1:
                total -= qrow[0, shared_pos[0]]
            else:
                total -= qrow[0, r] + qrow[0, t] + qrow[1, r] + qrow[1, t]
        else:
            total = qrow.sum()
            if m == 2:
                total -= qrow[0, t]
        return float(total)

    def local_llh(self, k: int, r: int, t: int) -> float:
        """Sum of likelihood terms over all block pairs involving r or t in graph k.

        Both-shared pairs contribute their pooled term (which spans every
        graph) instead of graph k's own term.
        """
        s = self.num_shared
        c = self.counts[k]
        C = c.C
        n = c.block_sizes
        B = C.shape[0]
        nr, nt = int(n[r]), int(n[t])
        dy_r = n * nr
        dy_t = n * nt
        if self.directed:
            dy_r[r] = nr * (nr - 1)
            dy_t[t] = nt * (nt - 1)
            cvec = np.concatenate([C[r], C[t], C[:, r], C[:, t]])
            dvec = np.concatenate([dy_r, dy_t, dy_r, dy_t])
            terms = _mle_terms(cvec, dvec - cvec)
            if s:
                if r < s:
                    terms[0:s] = 0.0
                    terms[2 * B:2 * B + s] = 0.0
                if t < s:
                    terms[B:B + s] = 0.0
                    terms[3 * B:3 * B + s] = 0.0
            total = terms.sum() - (terms[r] + terms[t] + terms[B + r] + terms[B + t])
        else:
            dy_r[r] = nr * (nr - 1) // 2
            dy_t[t] = nt * (nt - 1) // 2
            cvec = np.concatenate([C[r], C[t]])
            dvec = np.concatenate([dy_r, dy_t])
            terms = _mle_terms(cvec, dvec - cvec)
            if s:
                if r < s:
                    terms[0:s] = 0.0
                if t < s:
                    terms[B:B + s] = 0.0
            total = terms.sum() - terms[t]
        shared_pos = [p for p in (r, t) if p < s]
        if shared_pos:
            total += self._pooled_local(shared_pos, r, t)
        return float(total)

    def apply_move(self, k: int, v: int, to: int) -> None:
        move_vertex(self.graphs[k], self.partitions[k], self.counts[k], v, to)

    def delta_move(self, k: int, v: int, to: int) -> float:
        """LLH(after moving v to ``to``) - LLH(before); leaves the state unchanged."""
        r = int(self.partitions[k].assignment[v])
        if to == r:
            return 0.0
        before = self.local_llh(k, r, to)
        self.apply_move(k, v, to)
        after = self.local_llh(k, r, to)
        self.apply_move(k, v, r)
        return after - before


def delta_log_likelihood_move(state: SharedState, graph_index: int, v: int, to: int) -> float:
    """Change in total shared log-likelihood from one proposed vertex move."""
    return state.delta_move(graph_index, v, to)

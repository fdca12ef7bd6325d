"""Choosing which blocks to share once partitions are fixed.

Candidates live in the tuple space T = [B_1] x ... x [B_n]; a set of s
per-graph-disjoint tuples defines the injective alignments. The exact solver
is a branch-and-bound search over such sets, the greedy solver adds one tuple
at a time, and the random solver is the baseline. All three score against the
same pooled-likelihood objective.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .blocks import BlockCounts, InfeasibleSharedError, SharedMapping
from .likelihood import _XLOGX, _mle_terms, mle_log_likelihood, shared_log_likelihood

__all__ = [
    "TupleSpace",
    "PairScores",
    "SelectionResult",
    "pair_scores",
    "select_exact",
    "select_greedy",
    "select_random",
    "relabel_shared_first",
]

MATERIALIZE_CAP = 10**8  # max |T|^2 entries held as dense pooled-score tables


@dataclass
class SelectionResult:
    mapping: SharedMapping
    log_likelihood: float
    llh_loss_vs_unshared: float
    solver: str
    runtime_seconds: float


class TupleSpace:
    """Lazy view of [B_1] x ... x [B_n] indexed lexicographically."""

    def __init__(self, block_counts):
        self.shape = tuple(int(b) for b in block_counts)
        self.size = int(np.prod(self.shape)) if self.shape else 0

    def __len__(self) -> int:
        return self.size

    def decode(self, index: int) -> tuple:
        return tuple(int(c) for c in np.unravel_index(index, self.shape))

    def encode(self, coords) -> int:
        return int(np.ravel_multi_index(tuple(coords), self.shape))

    def coords_array(self) -> np.ndarray:
        """All tuples as a (|T|, n) array, lexicographic order."""
        grids = np.indices(self.shape).reshape(len(self.shape), -1).T
        return np.ascontiguousarray(grids, dtype=np.int64)

    def __iter__(self):
        for i in range(self.size):
            yield self.decode(i)


class PairScores:
    """Standalone and pooled pair scores backing the selectors.

    U[k][i, j] is the log-likelihood of block pair (i, j) in graph k at its
    own MLE. For tuples r, t the pooled score Q(r, t) uses the estimate from
    counts summed over graphs, and penalty(r, t) = sum_k U[k][r_k, t_k] -
    Q(r, t) >= 0 is the likelihood cost of sharing. Tables over the full
    tuple space are materialized only when |T|^2 fits under the cap.
    """

    def __init__(self, all_counts, materialize_cap: int = MATERIALIZE_CAP):
        self.counts: list[BlockCounts] = list(all_counts)
        self.directed = self.counts[0].directed
        if any(c.directed != self.directed for c in self.counts):
            raise ValueError("graphs must share directedness")
        _XLOGX.ensure(sum(int(c.block_sizes.sum()) ** 2 for c in self.counts))
        self.U = [_mle_terms(c.C, c.F) for c in self.counts]
        self.space = TupleSpace([c.num_blocks for c in self.counts])
        self.base_llh = sum(mle_log_likelihood(c) for c in self.counts)
        self.coords = self.space.coords_array()
        self._dyads = [c.dyads for c in self.counts]
        self._penalty = None
        if self.space.size**2 <= materialize_cap:
            self._penalty = self._materialize()
        else:
            self._cache: dict[tuple[int, int], float] = {}

    def _materialize(self) -> np.ndarray:
        cols = [self.coords[:, k] for k in range(len(self.counts))]
        pool_c = np.zeros((self.space.size, self.space.size), dtype=np.int64)
        pool_d = np.zeros_like(pool_c)
        u_sum = np.zeros(pool_c.shape, dtype=float)
        for k, c in enumerate(self.counts):
            rk = cols[k][:, None]
            tk = cols[k][None, :]
            pool_c += c.C[rk, tk]
            pool_d += self._dyads[k][rk, tk]
            u_sum += self.U[k][rk, tk]
        q = _mle_terms(pool_c, pool_d - pool_c)
        return u_sum - q

    def penalty(self, i: int, j: int) -> float:
        """Likelihood lost by pooling ordered tuple pair (i, j)."""
        if self._penalty is not None:
            return float(self._penalty[i, j])
        key = (i, j)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        r = self.coords[i]
        t = self.coords[j]
        pool_c = pool_d = 0
        u = 0.0
        for k, c in enumerate(self.counts):
            pool_c += int(c.C[r[k], t[k]])
            pool_d += int(self._dyads[k][r[k], t[k]])
            u += float(self.U[k][r[k], t[k]])
        val = u - float(_mle_terms(np.int64(pool_c), np.int64(pool_d - pool_c)))
        self._cache[key] = val
        return val

    def pen_self(self, i: int) -> float:
        return self.penalty(i, i)

    def pen_cross(self, i: int, j: int) -> float:
        """Total penalty a distinct tuple pair adds (both orders if directed)."""
        if self.directed:
            return self.penalty(i, j) + self.penalty(j, i)
        return self.penalty(i, j)

    def self_penalties(self) -> np.ndarray:
        if self._penalty is not None:
            return np.ascontiguousarray(np.diag(self._penalty))
        return self._penalty_vec(self.coords, self.coords)

    def _penalty_vec(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """Elementwise penalty of tuple pairs given as (|T|, n) coordinate rows."""
        pool_c = np.zeros(left.shape[0], dtype=np.int64)
        pool_d = np.zeros_like(pool_c)
        u = np.zeros(left.shape[0])
        for k, c in enumerate(self.counts):
            lk, rk = left[:, k], right[:, k]
            pool_c += c.C[lk, rk]
            pool_d += self._dyads[k][lk, rk]
            u += self.U[k][lk, rk]
        return u - _mle_terms(pool_c, pool_d - pool_c)

    def cross_vector(self, j: int) -> np.ndarray:
        """pen_cross(i, j) for every tuple i at once."""
        if self._penalty is not None:
            if self.directed:
                return self._penalty[:, j] + self._penalty[j, :]
            return self._penalty[:, j].copy()
        repeated = np.broadcast_to(self.coords[j], self.coords.shape)
        out = self._penalty_vec(self.coords, repeated)
        if self.directed:
            out = out + self._penalty_vec(repeated, self.coords)
        return out


def pair_scores(all_counts, materialize_cap: int = MATERIALIZE_CAP) -> PairScores:
    return PairScores(all_counts, materialize_cap)


def _check_feasible(all_counts, num_shared: int) -> None:
    min_b = min(c.num_blocks for c in all_counts)
    if num_shared < 0 or num_shared > min_b:
        raise InfeasibleSharedError(f"s={num_shared} infeasible for block counts (min {min_b})")


def _empty_result(all_counts, solver: str, started: float) -> SelectionResult:
    mapping = SharedMapping.identity(len(all_counts), 0)
    llh = sum(mle_log_likelihood(c) for c in all_counts)
    return SelectionResult(mapping, llh, 0.0, solver, time.perf_counter() - started)


def _result_from_tuples(all_counts, chosen_coords, solver: str, started: float,
                        base_llh: float) -> SelectionResult:
    # positions ordered by the first graph's block id: a canonical presentation
    rows = sorted(tuple(c) for c in chosen_coords)
    maps = [np.array([row[k] for row in rows], dtype=np.int64) for k in range(len(all_counts))]
    mapping = SharedMapping(maps)
    llh = shared_log_likelihood(all_counts, mapping)
    return SelectionResult(mapping, llh, base_llh - llh, solver, time.perf_counter() - started)


def select_exact(all_counts, num_shared: int, materialize_cap: int = MATERIALIZE_CAP) -> SelectionResult:
    """Optimal shared-block selection by branch-and-bound over tuple sets.

    Search nodes pick tuples with strictly increasing first-graph block ids
    (shared-position order carries no meaning, so this kills the s!
    relabeling symmetry). Pruning uses an admissible bound: the penalty of a
    partial set plus the smallest possible self-penalties of the tuples still
    to be chosen can only underestimate the true penalty, because cross
    penalties are nonnegative. Ties resolve to the lexicographically smallest
    tuple set via DFS order.
    """
    started = time.perf_counter()
    counts = list(all_counts)
    _check_feasible(counts, num_shared)
    if num_shared == 0:
        return _empty_result(counts, "exact", started)
    scores = PairScores(counts, materialize_cap)
    space = scores.space
    coords = scores.coords
    n = len(counts)
    size = space.size
    self_pen = scores.self_penalties()
    sorted_self = np.sort(self_pen)
    prefix = np.concatenate([[0.0], np.cumsum(sorted_self)])
    # stride of the first coordinate in lexicographic tuple indices
    stride0 = size // space.shape[0]

    used = [np.zeros(B, dtype=bool) for B in space.shape]
    chosen: list[int] = []
    best = {"penalty": np.inf, "set": None}

    def dfs(depth: int, start: int, pen_so_far: float) -> None:
        remaining = num_shared - depth
        if pen_so_far + prefix[remaining] >= best["penalty"]:
            return
        if remaining == 0:
            best["penalty"] = pen_so_far
            best["set"] = list(chosen)
            return
        # leave room for `remaining` strictly increasing first coordinates
        stop = size - (remaining - 1) * stride0
        i = start
        while i < stop:
            row = coords[i]
            blocked = False
            for k in range(1, n):
                if used[k][row[k]]:
                    blocked = True
                    break
            if blocked:
                i += 1
                continue
            pen = pen_so_far + scores.pen_self(i)
            for j in chosen:
                pen += scores.pen_cross(i, j)
            if pen + prefix[remaining - 1] < best["penalty"]:
                for k in range(1, n):
                    used[k][row[k]] = True
                chosen.append(i)
                dfs(depth + 1, (row[0] + 1) * stride0, pen)
                chosen.pop()
                for k in range(1, n):
                    used[k][row[k]] = False
            i += 1

    dfs(0, 0, 0.0)
    assert best["set"] is not None
    return _result_from_tuples(counts, [coords[i] for i in best["set"]], "exact",
                               started, scores.base_llh)


def select_greedy(all_counts, num_shared: int, materialize_cap: int = MATERIALIZE_CAP) -> SelectionResult:
    """Pick s tuples one at a time, each with the smallest likelihood decrease
    against the tuples already shared, deleting conflicting tuples after each
    pick. Ties go to the lexicographically smallest tuple.
    """
    started = time.perf_counter()
    counts = list(all_counts)
    _check_feasible(counts, num_shared)
    if num_shared == 0:
        return _empty_result(counts, "greedy", started)
    scores = PairScores(counts, materialize_cap)
    coords = scores.coords
    alive = np.ones(scores.space.size, dtype=bool)
    cum_cross = np.zeros(scores.space.size)
    self_pen = scores.self_penalties()
    chosen: list[int] = []
    for _ in range(num_shared):
        total = np.where(alive, self_pen + cum_cross, np.inf)
        i = int(np.argmin(total))
        chosen.append(i)
        conflict = (coords == coords[i][None, :]).any(axis=1)
        alive &= ~conflict
        cum_cross += scores.cross_vector(i)
    return _result_from_tuples(counts, [coords[i] for i in chosen], "greedy",
                               started, scores.base_llh)


def select_random(all_counts, num_shared: int, seed=None) -> SelectionResult:
    """Baseline: uniformly random injective alignment per graph."""
    started = time.perf_counter()
    counts = list(all_counts)
    _check_feasible(counts, num_shared)
    base = sum(mle_log_likelihood(c) for c in counts)
    if num_shared == 0:
        return _empty_result(counts, "random", started)
    rng = np.random.default_rng(seed)
    maps = [rng.permutation(c.num_blocks)[:num_shared].astype(np.int64) for c in counts]
    mapping = SharedMapping(maps)
    llh = shared_log_likelihood(counts, mapping)
    return SelectionResult(mapping, llh, base - llh, "random", time.perf_counter() - started)


def relabel_shared_first(partitions, mapping: SharedMapping):
    """Permute block labels per graph so that shared blocks sit at [0, s).

    Returns new partitions and the identity-prefix mapping; counts and
    likelihood are invariant under the relabeling.
    """
    parts = list(partitions)
    mapping.validate([p.num_blocks for p in parts])
    s = mapping.num_shared
    new_parts = []
    for p, sigma in zip(parts, mapping.maps):
        perm = np.full(p.num_blocks, -1, dtype=np.int64)
        perm[sigma] = np.arange(s)
        rest = np.setdiff1d(np.arange(p.num_blocks), sigma, assume_unique=False)
        perm[rest] = np.arange(s, p.num_blocks)
        new_parts.append(p.relabel(perm))
    return new_parts, SharedMapping.identity(len(parts), s)

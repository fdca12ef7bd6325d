"""Annealed MCMC fitting of block models, with or without pooled shared blocks.

Strategies:
  single      independent vertex-move MCMC per graph (no sharing)
  multilevel  agglomerative start: singleton blocks merged down to the target
  ml_single   multilevel init followed by single-MCMC refinement
  shared      joint MCMC where the first s blocks of every graph pool counts
  ml_shared   multilevel init, exact shared-block selection, relabel, then
              shared-MCMC refinement
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .blocks import (
    BlockCounts,
    InfeasibleSharedError,
    Partition,
    SharedMapping,
    _shift_counts,
    compute_block_counts,
    move_vertex,
)
from .graph import Graph
from .likelihood import SharedState, ThetaMatrix, _mle_terms, bic, theta_matrices
from .select import relabel_shared_first, select_exact

__all__ = [
    "McmcConfig",
    "FitResult",
    "STRATEGIES",
    "propose_move",
    "accept_probability",
    "mcmc_fit",
    "multilevel_init",
    "pipeline",
]

STRATEGIES = ("single", "multilevel", "ml_single", "shared", "ml_shared")


@dataclass
class McmcConfig:
    """Knobs for the annealed sampler and the agglomerative initializer."""

    sweeps: int = 500
    beta_init: float = 1.0
    beta_max: float = 1e4
    anneal_frac: float = 0.9  # fraction of sweeps spent growing beta
    epsilon: float = 0.1  # proposal smoothing; > 0 keeps proposals irreducible
    seed: int = 0
    mode: str = "shared"
    merge_factor: float = 2.0
    resettle_sweeps: int = 10
    merge_candidates: int = 10
    greedy_passes: int = 20
    track_trace: bool = False
    debug_recount_every: int = 0  # > 0: verify counts against a recount every k sweeps

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.beta_max < self.beta_init:
            raise ValueError("beta schedule must be non-decreasing")
        if self.mode not in ("single", "shared"):
            raise ValueError("mode must be 'single' or 'shared'")


def beta_at(config: McmcConfig, sweep: int) -> float:
    """Geometric ramp from beta_init to beta_max, then hold."""
    ramp = max(1, int(math.ceil(config.anneal_frac * config.sweeps)))
    if sweep >= ramp - 1 or config.beta_init == config.beta_max:
        return config.beta_max
    t = sweep / (ramp - 1) if ramp > 1 else 1.0
    return config.beta_init * (config.beta_max / config.beta_init) ** t


@dataclass
class FitResult:
    partitions: list[Partition]
    mapping: SharedMapping | None
    log_likelihood: float
    bic: float
    num_parameters: int
    thetas: list[ThetaMatrix]
    algorithm: str
    seed: int
    trace: list[tuple] | None = None  # rows (sweep, beta, llh, best_llh)


# ---------------------------------------------------------------------------
# move proposals (edge-guided heuristic with epsilon smoothing)

def _edge_weight_row(counts: BlockCounts, t: int) -> np.ndarray:
    """Edges between block t and every block, both directions combined."""
    C = counts.C
    if counts.directed:
        row = C[t, :] + C[:, t]
        row[t] = C[t, t]
        return row
    return C[t, :].copy()


def _propose_target(graph: Graph, partition: Partition, counts: BlockCounts,
                    v: int, epsilon: float, rng) -> int:
    B = partition.num_blocks
    nb = graph.incident(v)
    if nb.size == 0:
        return int(rng.integers(B))
    u = nb[rng.integers(nb.size)]
    t = int(partition.assignment[u])
    weights = _edge_weight_row(counts, t).astype(float)
    weights += epsilon
    cum = np.cumsum(weights)
    x = rng.random() * cum[-1]
    return min(int(np.searchsorted(cum, x, side="right")), B - 1)


def _prob_from_tally(counts: BlockCounts, blocks: np.ndarray, mult: np.ndarray,
                     degree: int, target: int, epsilon: float, B: int) -> float:
    C = counts.C
    if counts.directed:
        w = C[blocks, target] + C[target, blocks]
        w[blocks == target] = C[target, target]
    else:
        w = C[blocks, target]
    probs = (w + epsilon) / (counts.edge_totals(blocks) + epsilon * B)
    return float((mult * probs).sum() / degree)


def _proposal_prob(graph: Graph, partition: Partition, counts: BlockCounts,
                   v: int, target: int, epsilon: float) -> float:
    """Exact probability that the heuristic proposes ``target`` for v."""
    B = partition.num_blocks
    nb = graph.incident(v)
    if nb.size == 0:
        return 1.0 / B
    bc = np.bincount(partition.assignment[nb], minlength=B)
    blocks = np.nonzero(bc)[0]
    return _prob_from_tally(counts, blocks, bc[blocks], nb.size, target, epsilon, B)


def propose_move(graph: Graph, partition: Partition, counts: BlockCounts,
                 v: int, epsilon: float, rng):
    """Draw a target block for v; return (to, forward_prob, reverse_prob).

    The reverse probability is evaluated under post-move counts, as the
    Hastings correction requires; the state is restored before returning.
    """
    to = _propose_target(graph, partition, counts, v, epsilon, rng)
    fwd = _proposal_prob(graph, partition, counts, v, to, epsilon)
    r = int(partition.assignment[v])
    if to == r:
        return to, fwd, fwd
    move_vertex(graph, partition, counts, v, to)
    rev = _proposal_prob(graph, partition, counts, v, r, epsilon)
    move_vertex(graph, partition, counts, v, r)
    return to, fwd, rev


def accept_probability(delta_llh: float, beta: float, fwd: float, rev: float) -> float:
    """min(1, exp(beta*delta) * rev/fwd), evaluated safely in log space."""
    if delta_llh == -math.inf or rev <= 0.0:
        return 0.0
    log_ratio = beta * delta_llh + math.log(rev) - math.log(fwd)
    if log_ratio >= 0.0:
        return 1.0
    return math.exp(log_ratio)


# ---------------------------------------------------------------------------
# sweeps

class _BestTracker:
    """Keeps a copy of the best-likelihood assignment vectors seen so far."""

    def __init__(self, state: SharedState, llh: float):
        self.best_llh = llh
        self.buffers = [p.assignment.copy() for p in state.partitions]

    def offer(self, llh: float, state: SharedState) -> None:
        if llh > self.best_llh:
            self.best_llh = llh
            for buf, p in zip(self.buffers, state.partitions):
                np.copyto(buf, p.assignment)

    def partitions(self, state: SharedState) -> list[Partition]:
        return [
            Partition(buf.copy(), p.num_blocks, p.graph_id)
            for buf, p in zip(self.buffers, state.partitions)
        ]


def _sweep(state: SharedState, beta: float, epsilon: float, rng,
           cur_llh: float, tracker: _BestTracker | None) -> float:
    for k, graph in enumerate(state.graphs):
        partition = state.partitions[k]
        counts = state.counts[k]
        assignment = partition.assignment
        B = partition.num_blocks
        directed = graph.directed
        for v in rng.permutation(graph.num_vertices):
            v = int(v)
            to = _propose_target(graph, partition, counts, v, epsilon, rng)
            r = int(assignment[v])
            if to == r:
                continue
            # neighbor tallies survive the move: v is never its own neighbor
            if directed:
                out_cnt = np.bincount(assignment[graph.out_neighbors(v)], minlength=B)
                in_cnt = np.bincount(assignment[graph.in_neighbors(v)], minlength=B)
                inc_cnt = out_cnt + in_cnt
            else:
                out_cnt = np.bincount(assignment[graph.incident(v)], minlength=B)
                in_cnt = None
                inc_cnt = out_cnt
            degree = graph.degree(v)
            if degree:
                blocks = np.nonzero(inc_cnt)[0]
                mult = inc_cnt[blocks]
                fwd = _prob_from_tally(counts, blocks, mult, degree, to, epsilon, B)
            else:
                fwd = 1.0 / B
            before = state.local_llh(k, r, to)
            _shift_counts(partition, counts, v, r, to, out_cnt, in_cnt)
            after = state.local_llh(k, r, to)
            delta = after - before
            if degree:
                rev = _prob_from_tally(counts, blocks, mult, degree, r, epsilon, B)
            else:
                rev = fwd
            log_ratio = beta * delta + math.log(rev) - math.log(fwd)
            if log_ratio >= 0.0 or rng.random() < math.exp(log_ratio):
                cur_llh += delta
                if tracker is not None:
                    tracker.offer(cur_llh, state)
            else:
                _shift_counts(partition, counts, v, to, r, out_cnt, in_cnt)
    return cur_llh


def _greedy_polish(state: SharedState, rng, max_passes: int) -> None:
    """Hill-climb: move each vertex to its best block while any move gains."""
    for _ in range(max_passes):
        improved = False
        for k, graph in enumerate(state.graphs):
            B = state.partitions[k].num_blocks
            for v in rng.permutation(graph.num_vertices):
                v = int(v)
                r = int(state.partitions[k].assignment[v])
                best_to, best_delta = r, 1e-12
                for to in range(B):
                    if to == r:
                        continue
                    delta = state.delta_move(k, v, to)
                    if delta > best_delta:
                        best_to, best_delta = to, delta
                if best_to != r:
                    state.apply_move(k, v, best_to)
                    improved = True
        if not improved:
            break


def _assert_counts_consistent(state: SharedState) -> None:
    for g, p, counts in zip(state.graphs, state.partitions, state.counts):
        fresh = compute_block_counts(g, Partition(p.assignment.copy(), p.num_blocks))
        if not np.array_equal(counts.C, fresh.C):
            raise AssertionError("incremental block counts diverged from a full recount")
        if not np.array_equal(p.block_sizes, fresh.block_sizes):
            raise AssertionError("block sizes diverged from the assignment")


def _random_partitions(graphs, num_blocks, rng) -> list[Partition]:
    return [
        Partition(rng.integers(B, size=g.num_vertices), B, graph_id=k)
        for k, (g, B) in enumerate(zip(graphs, num_blocks))
    ]


def _finalize(state: SharedState, algorithm: str, seed: int, trace,
              mapping: SharedMapping | None) -> FitResult:
    score_mapping = mapping if mapping is not None else SharedMapping.identity(state.num_graphs, 0)
    score = bic(state.counts, score_mapping)
    thetas = theta_matrices(state.counts, score_mapping)
    return FitResult(
        partitions=state.partitions,
        mapping=mapping,
        log_likelihood=score.log_likelihood,
        bic=score.bic,
        num_parameters=score.num_parameters,
        thetas=thetas,
        algorithm=algorithm,
        seed=seed,
        trace=trace,
    )


def mcmc_fit(graphs, num_blocks, num_shared: int, config: McmcConfig,
             init_partitions=None, rng=None, algorithm: str | None = None) -> FitResult:
    """Annealed vertex-move MCMC; returns the best state visited, polished.

    In shared mode the first ``num_shared`` blocks of every graph pool their
    counts (identity-prefix alignment). Vertices are visited in freshly
    shuffled order each sweep, graphs sequentially within a sweep.
    """
    graphs = list(graphs)
    num_blocks = [int(b) for b in num_blocks]
    if config.mode == "single" and num_shared != 0:
        raise ValueError("single mode requires num_shared == 0")
    if num_shared > min(num_blocks):
        raise InfeasibleSharedError(f"s={num_shared} exceeds min block count {min(num_blocks)}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if init_partitions is None:
        partitions = _random_partitions(graphs, num_blocks, rng)
    else:
        partitions = [p.copy() for p in init_partitions]
    state = SharedState(graphs, partitions, num_shared)
    cur = state.log_likelihood()
    tracker = _BestTracker(state, cur)
    trace = [] if config.track_trace else None
    for sweep in range(config.sweeps):
        beta = beta_at(config, sweep)
        cur = _sweep(state, beta, config.epsilon, rng, cur, tracker)
        cur = state.log_likelihood()  # resync accumulated drift each sweep
        tracker.offer(cur, state)
        if trace is not None:
            trace.append((sweep, beta, cur, tracker.best_llh))
        if config.debug_recount_every and sweep % config.debug_recount_every == 0:
            _assert_counts_consistent(state)
    # polish from the best state seen, accepting only strict improvements
    state = SharedState(graphs, tracker.partitions(state), num_shared)
    _greedy_polish(state, rng, config.greedy_passes)
    mapping = SharedMapping.identity(len(graphs), num_shared) if config.mode == "shared" else None
    if algorithm is None:
        algorithm = "shared" if config.mode == "shared" else "single"
    return _finalize(state, algorithm, config.seed, trace, mapping)


# ---------------------------------------------------------------------------
# agglomerative initialization

def _merge_delta(counts: BlockCounts, a: int, b: int) -> float:
    """LLH change from relabeling every vertex of block a into block b."""
    C = counts.C
    n = counts.block_sizes
    B = C.shape[0]
    na, nb_ = int(n[a]), int(n[b])
    nm = na + nb_
    sizes2 = n.copy()
    sizes2[b] = nm
    sizes2[a] = 0
    if counts.directed:
        dy_a = n * na
        dy_a[a] = na * (na - 1)
        dy_b = n * nb_
        dy_b[b] = nb_ * (nb_ - 1)
        cvec = np.concatenate([C[a], C[b], C[:, a], C[:, b]])
        dvec = np.concatenate([dy_a, dy_b, dy_a, dy_b])
        tb = _mle_terms(cvec, dvec - cvec)
        before = tb.sum() - (tb[a] + tb[b] + tb[B + a] + tb[B + b])
        new_row = C[a] + C[b]
        new_row[b] = C[a, a] + C[b, b] + C[a, b] + C[b, a]
        new_row[a] = 0
        new_col = C[:, a] + C[:, b]
        new_col[b] = new_row[b]
        new_col[a] = 0
        dy2 = sizes2 * nm
        dy2[b] = nm * (nm - 1)
        cvec2 = np.concatenate([new_row, new_col])
        dvec2 = np.concatenate([dy2, dy2])
        ta = _mle_terms(cvec2, dvec2 - cvec2)
        after = ta.sum() - ta[b]
    else:
        dy_a = n * na
        dy_a[a] = na * (na - 1) // 2
        dy_b = n * nb_
        dy_b[b] = nb_ * (nb_ - 1) // 2
        cvec = np.concatenate([C[a], C[b]])
        dvec = np.concatenate([dy_a, dy_b])
        tb = _mle_terms(cvec, dvec - cvec)
        before = tb.sum() - tb[b]
        new_row = C[a] + C[b]
        new_row[b] = C[a, a] + C[b, b] + C[a, b]
        new_row[a] = 0
        dy2 = sizes2 * nm
        dy2[b] = nm * (nm - 1) // 2
        after = _mle_terms(new_row, dy2 - new_row).sum()
    return float(after - before)


def _merge_candidates_for(counts: BlockCounts, a: int, limit: int, rng) -> np.ndarray:
    C = counts.C
    B = counts.num_blocks
    if counts.directed:
        row = C[a, :] + C[:, a]
    else:
        row = C[a, :].copy()
    row[a] = 0
    cand = np.nonzero(row)[0]
    if cand.size > limit:
        cand = rng.choice(cand, size=limit, replace=False)
    extra = int(rng.integers(B))
    if extra != a and extra not in cand:
        cand = np.append(cand, extra)
    if cand.size == 0:
        others = np.delete(np.arange(B), a)
        cand = rng.choice(others, size=min(2, others.size), replace=False)
    return cand


def _merge_level(graph: Graph, assignment: np.ndarray, B: int, target: int,
                 config: McmcConfig, rng) -> tuple[np.ndarray, int]:
    while B > target:
        partition = Partition(assignment, B)
        counts = compute_block_counts(graph, partition)
        proposals = []
        for a in range(B):
            best = None
            for b in _merge_candidates_for(counts, a, config.merge_candidates, rng):
                loss = -_merge_delta(counts, a, int(b))
                if best is None or loss < best[0]:
                    best = (loss, a, int(b))
            if best is not None:
                proposals.append(best)
        proposals.sort()
        dirty = np.zeros(B, dtype=bool)
        merge_into = np.arange(B, dtype=np.int64)
        applied = 0
        for loss, a, b in proposals:
            if applied >= B - target:
                break
            if dirty[a] or dirty[b]:
                continue
            merge_into[a] = b
            dirty[a] = dirty[b] = True
            applied += 1
        keep = merge_into == np.arange(B)
        new_label = np.cumsum(keep) - 1
        assignment = new_label[merge_into[assignment]]
        B -= applied
    return assignment, B


def multilevel_init(graph: Graph, target_blocks: int, config: McmcConfig, rng=None) -> Partition:
    """Agglomerative start: begin with singleton blocks, halve the block count
    per level (ranking candidate merges by likelihood loss), and re-settle
    vertices with a few high-beta sweeps between levels.
    """
    N = graph.num_vertices
    if target_blocks > N:
        raise ValueError(f"target_blocks={target_blocks} exceeds vertex count {N}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    assignment = np.arange(N, dtype=np.int64)
    B = N
    if target_blocks == N:
        return Partition(assignment, N)
    while B > target_blocks:
        level_target = max(target_blocks, int(math.ceil(B / config.merge_factor)))
        assignment, B = _merge_level(graph, assignment, B, level_target, config, rng)
        state = SharedState([graph], [Partition(assignment, B)], 0)
        cur = state.log_likelihood()
        for _ in range(config.resettle_sweeps):
            cur = _sweep(state, config.beta_max, config.epsilon, rng, cur, None)
        assignment = state.partitions[0].assignment
    # settle into a local optimum at the final level
    state = SharedState([graph], [Partition(assignment, target_blocks)], 0)
    _greedy_polish(state, rng, config.greedy_passes)
    return state.partitions[0]


# ---------------------------------------------------------------------------
# strategy pipelines

def _multilevel_partitions(graphs, num_blocks, config: McmcConfig, seed_seq) -> list[Partition]:
    parts = []
    for k, (g, B) in enumerate(zip(graphs, num_blocks)):
        rng = np.random.default_rng(seed_seq.spawn(1)[0])
        p = multilevel_init(g, B, config, rng=rng)
        p.graph_id = k
        parts.append(p)
    return parts


def pipeline(strategy: str, graphs, num_blocks, num_shared: int, config: McmcConfig) -> FitResult:
    """Run one of the named fitting strategies end to end."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    graphs = list(graphs)
    num_blocks = [int(b) for b in num_blocks]
    if strategy in ("single", "multilevel", "ml_single") and num_shared:
        raise ValueError(f"strategy {strategy!r} does not take shared blocks")
    if num_shared > min(num_blocks):
        raise InfeasibleSharedError(f"s={num_shared} exceeds min block count {min(num_blocks)}")
    seed_seq = np.random.SeedSequence(config.seed)

    if strategy == "single":
        cfg = _with_mode(config, "single")
        return mcmc_fit(graphs, num_blocks, 0, cfg, algorithm="single")

    if strategy == "multilevel":
        parts = _multilevel_partitions(graphs, num_blocks, config, seed_seq)
        state = SharedState(graphs, parts, 0)
        return _finalize(state, "multilevel", config.seed, None, None)

    if strategy == "ml_single":
        parts = _multilevel_partitions(graphs, num_blocks, config, seed_seq)
        cfg = _with_mode(config, "single")
        rng = np.random.default_rng(seed_seq.spawn(1)[0])
        return mcmc_fit(graphs, num_blocks, 0, cfg, init_partitions=parts, rng=rng,
                        algorithm="ml_single")

    if strategy == "shared":
        cfg = _with_mode(config, "shared")
        return mcmc_fit(graphs, num_blocks, num_shared, cfg, algorithm="shared")

    # ml_shared
    parts = _multilevel_partitions(graphs, num_blocks, config, seed_seq)
    counts = [compute_block_counts(g, p) for g, p in zip(graphs, parts)]
    selection = select_exact(counts, num_shared)
    parts, _ = relabel_shared_first(parts, selection.mapping)
    cfg = _with_mode(config, "shared")
    rng = np.random.default_rng(seed_seq.spawn(1)[0])
    return mcmc_fit(graphs, num_blocks, num_shared, cfg, init_partitions=parts, rng=rng,
                    algorithm="ml_shared")


def _with_mode(config: McmcConfig, mode: str) -> McmcConfig:
    return config if config.mode == mode else replace(config, mode=mode)

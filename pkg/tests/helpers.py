"""Independent brute-force oracles used across the test suite.

Everything here is written with plain loops and math.log so that it shares
no code path with the library internals it checks.
"""

from __future__ import annotations

import math
from itertools import combinations, permutations, product

import numpy as np

import ssbm


def bernoulli_term(c: int, f: int) -> float:
    """c*log(t) + f*log(1-t) at t = c/(c+f), with 0*log(0) = 0."""
    total = c + f
    if total == 0:
        return 0.0
    out = 0.0
    if c:
        out += c * math.log(c / total)
    if f:
        out += f * math.log(f / total)
    return out


def brute_counts(graph: ssbm.Graph, partition: ssbm.Partition):
    """Per-dyad tally of (C, F, dyads) by looping over every vertex pair."""
    B = partition.num_blocks
    b = partition.assignment
    N = graph.num_vertices
    edge_set = set()
    for u, v in graph.edge_array:
        edge_set.add((int(u), int(v)))
        if not graph.directed:
            edge_set.add((int(v), int(u)))
    C = np.zeros((B, B), dtype=np.int64)
    D = np.zeros((B, B), dtype=np.int64)
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            if not graph.directed and i > j:
                continue
            x, y = int(b[i]), int(b[j])
            if not graph.directed and x > y:
                x, y = y, x
            D[x, y] += 1
            if (i, j) in edge_set:
                C[x, y] += 1
    return C, D - C, D


def dyad_log_likelihood(graph: ssbm.Graph, partition: ssbm.Partition, theta: np.ndarray) -> float:
    """Sum of per-dyad Bernoulli log-probabilities."""
    b = partition.assignment
    edge_set = set()
    for u, v in graph.edge_array:
        edge_set.add((int(u), int(v)))
        if not graph.directed:
            edge_set.add((int(v), int(u)))
    total = 0.0
    N = graph.num_vertices
    for i in range(N):
        for j in range(N):
            if i == j or (not graph.directed and i > j):
                continue
            p = float(theta[b[i], b[j]])
            if (i, j) in edge_set:
                total += math.log(p) if p > 0 else -math.inf
            else:
                total += math.log(1 - p) if p < 1 else -math.inf
    return total


def direct_shared_llh(counts, maps, directed: bool) -> float:
    """Total pooled log-likelihood evaluated straight from the definitions."""
    Cs = [np.asarray(c.C) for c in counts]
    Fs = [np.asarray(c.F) for c in counts]
    n = len(Cs)
    s = len(maps[0]) if maps else 0
    shared = [set(int(x) for x in m) for m in maps]
    total = 0.0
    for k in range(n):
        B = Cs[k].shape[0]
        for i in range(B):
            js = range(B) if directed else range(i, B)
            for j in js:
                if i in shared[k] and j in shared[k]:
                    continue
                total += bernoulli_term(int(Cs[k][i, j]), int(Fs[k][i, j]))
    for a in range(s):
        bs = range(s) if directed else range(a, s)
        for b in bs:
            pc = pf = 0
            for k in range(n):
                i, j = int(maps[k][a]), int(maps[k][b])
                pc += int(Cs[k][i, j])
                pf += int(Fs[k][i, j])
            total += bernoulli_term(pc, pf)
    return total


def enumerate_best_shared(counts, s: int, directed: bool):
    """Optimal shared-block likelihood by enumerating every canonical family
    of injective alignments (graph 1 sorted, others permuted)."""
    Cs = [np.asarray(c.C) for c in counts]
    Fs = [np.asarray(c.F) for c in counts]
    n = len(Cs)
    base = 0.0
    for k in range(n):
        B = Cs[k].shape[0]
        for i in range(B):
            js = range(B) if directed else range(i, B)
            for j in js:
                base += bernoulli_term(int(Cs[k][i, j]), int(Fs[k][i, j]))
    if s == 0:
        return base, [tuple()] * n
    others = [list(permutations(range(C.shape[0]), s)) for C in Cs[1:]]
    best = -math.inf
    best_maps = None
    for first in combinations(range(Cs[0].shape[0]), s):
        for rest in product(*others):
            maps = [first, *rest]
            corr = 0.0
            for a in range(s):
                bs = range(s) if directed else range(a, s)
                for b in bs:
                    pc = pf = 0
                    for k in range(n):
                        i, j = maps[k][a], maps[k][b]
                        c, f = int(Cs[k][i, j]), int(Fs[k][i, j])
                        pc += c
                        pf += f
                        corr -= bernoulli_term(c, f)
                    corr += bernoulli_term(pc, pf)
            if base + corr > best:
                best = base + corr
                best_maps = maps
    return best, best_maps


def ari_pair_bruteforce(labels_a, labels_b) -> float:
    """Adjusted Rand index from explicit enumeration of all item pairs."""
    a = list(labels_a)
    b = list(labels_b)
    n = len(a)
    both = same_a = same_b = 0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            pairs += 1
            sa = a[i] == a[j]
            sb = b[i] == b[j]
            both += sa and sb
            same_a += sa
            same_b += sb
    expected = same_a * same_b / pairs
    maximum = 0.5 * (same_a + same_b)
    if maximum == expected:
        return 1.0
    return (both - expected) / (maximum - expected)


def random_graph(rng, num_vertices: int, p_edge: float, directed: bool) -> ssbm.Graph:
    draws = rng.random((num_vertices, num_vertices)) < p_edge
    np.fill_diagonal(draws, False)
    if not directed:
        draws = np.triu(draws, 1)
    return ssbm.Graph(np.argwhere(draws), num_vertices, directed)


def random_fixed_instance(rng, n=None, directed=None, max_blocks=5, max_shared=3):
    """Random SSBM-FIXED instance: small graphs, uniform partitions, counts."""
    n = int(rng.integers(2, 4)) if n is None else n
    directed = bool(rng.integers(2)) if directed is None else directed
    Bs = [int(x) for x in rng.integers(2, max_blocks + 1, size=n)]
    graphs, partitions = [], []
    for B in Bs:
        N = int(rng.integers(12, 32))
        g = random_graph(rng, N, float(rng.uniform(0.1, 0.6)), directed)
        graphs.append(g)
        partitions.append(ssbm.Partition(rng.integers(B, size=N), B))
    counts = [ssbm.compute_block_counts(g, p) for g, p in zip(graphs, partitions)]
    s = int(rng.integers(0, min(min(Bs), max_shared) + 1))
    return graphs, partitions, counts, s, directed


def planted_fixed_instance(rng, n=None, directed=None, max_blocks=5, max_shared=3,
                           min_vertices=20, max_vertices=50):
    """SSBM-FIXED instance drawn from the planted generation protocol."""
    n = int(rng.integers(2, 4)) if n is None else n
    directed = bool(rng.integers(2)) if directed is None else directed
    B = int(rng.integers(2, max_blocks + 1))
    s_true = int(rng.integers(0, min(B, max_shared) + 1))
    N = int(rng.integers(min_vertices, max_vertices))
    inst = ssbm.generate(n, N, B, s_true, directed=directed, seed=int(rng.integers(2**31)))
    counts = [ssbm.compute_block_counts(g, p) for g, p in zip(inst.graphs, inst.true_partitions)]
    s = int(rng.integers(0, min(B, max_shared) + 1))
    return inst, counts, s, directed

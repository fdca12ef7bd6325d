"""Planted instances: block-model graphs with a common shared-block prefix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import InfeasibleSharedError, Partition, SharedMapping
from .graph import Graph
from .likelihood import ThetaMatrix

__all__ = ["PlantedInstance", "generate", "add_noise"]


@dataclass
class PlantedInstance:
    graphs: list[Graph]
    true_partitions: list[Partition]
    true_mapping: SharedMapping
    true_thetas: list[ThetaMatrix]
    seed: int | None
    params: dict = field(default_factory=dict)

    @property
    def num_graphs(self) -> int:
        return len(self.graphs)


def _as_list(value, n: int, name: str) -> list[int]:
    if np.isscalar(value):
        return [int(value)] * n
    out = [int(v) for v in value]
    if len(out) != n:
        raise ValueError(f"{name} must give one value per graph")
    return out


def _sample_theta(B: int, rng, alpha: float, beta: float, directed: bool) -> np.ndarray:
    theta = rng.beta(alpha, beta, size=(B, B))
    if not directed:
        theta = np.triu(theta) + np.triu(theta, 1).T
    return theta


def generate(n: int, num_vertices, num_blocks, num_shared: int,
             beta_params=(0.5, 1.0), directed: bool = True, seed=None,
             balanced: bool = False, fixed_theta=None) -> PlantedInstance:
    """Plant n block-model graphs whose first ``num_shared`` blocks share
    edge probabilities.

    Vertices get i.i.d. uniform block labels (``balanced=True`` splits them
    as evenly as possible instead); each block-pair probability is drawn
    Beta(alpha, beta), with the shared s x s corner drawn once and copied
    into every graph. ``fixed_theta`` (scalar or full matrix) bypasses the
    Beta draw -- handy for tests.
    """
    Ns = _as_list(num_vertices, n, "num_vertices")
    Bs = _as_list(num_blocks, n, "num_blocks")
    if num_shared > min(Bs):
        raise InfeasibleSharedError(f"s={num_shared} exceeds min block count {min(Bs)}")
    if any(N < B for N, B in zip(Ns, Bs)):
        raise ValueError("need at least one vertex per block")
    alpha, beta = beta_params
    rng = np.random.default_rng(seed)

    s = num_shared
    if fixed_theta is None:
        shared_corner = _sample_theta(s, rng, alpha, beta, directed) if s else None
        thetas = []
        for B in Bs:
            th = _sample_theta(B, rng, alpha, beta, directed)
            if s:
                th[:s, :s] = shared_corner
            thetas.append(th)
    else:
        fixed = np.asarray(fixed_theta, dtype=float)
        thetas = []
        for B in Bs:
            th = np.full((B, B), float(fixed)) if fixed.ndim == 0 else fixed.copy()
            if th.shape != (B, B):
                raise ValueError("fixed_theta matrix must be B x B")
            thetas.append(th)

    graphs, partitions = [], []
    for k, (N, B, th) in enumerate(zip(Ns, Bs, thetas)):
        if balanced:
            labels = np.repeat(np.arange(B), -(-N // B))[:N]
            rng.shuffle(labels)
        else:
            labels = rng.integers(B, size=N)
        partition = Partition(labels.astype(np.int64), B, graph_id=k)
        probs = th[partition.assignment[:, None], partition.assignment[None, :]]
        draws = rng.random((N, N))
        if directed:
            adj = draws < probs
            np.fill_diagonal(adj, False)
            edges = np.argwhere(adj)
        else:
            iu = np.triu_indices(N, 1)
            hit = draws[iu] < probs[iu]
            edges = np.column_stack([iu[0][hit], iu[1][hit]])
        graphs.append(Graph(edges, N, directed))
        partitions.append(partition)

    return PlantedInstance(
        graphs=graphs,
        true_partitions=partitions,
        true_mapping=SharedMapping.identity(n, s),
        true_thetas=[ThetaMatrix(t) for t in thetas],
        seed=seed,
        params={
            "n": n, "num_vertices": Ns, "num_blocks": Bs, "num_shared": s,
            "beta_params": [alpha, beta], "directed": directed, "balanced": balanced,
        },
    )


def add_noise(partition: Partition, noise: float, seed=None) -> Partition:
    """Independently reassign each vertex, with probability ``noise``, to a
    uniformly random block (possibly its own)."""
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    labels = partition.assignment.copy()
    hit = rng.random(labels.shape[0]) < noise
    labels[hit] = rng.integers(partition.num_blocks, size=int(hit.sum()))
    return Partition(labels, partition.num_blocks, partition.graph_id)

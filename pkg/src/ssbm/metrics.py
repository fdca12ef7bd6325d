"""Partition-recovery scores: adjusted Rand index and its shared-block variant."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import SharedMapping

__all__ = ["ari", "shared_ari", "shared_labels", "EvalReport", "evaluate_recovery"]


def _comb2(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) // 2


def ari(labels_a, labels_b) -> float:
    """Adjusted Rand index via the pair-counting contingency formula.

    1 for identical partitions up to relabeling, ~0 for independent random
    labelings. Degenerate cases where the correction denominator vanishes
    (both partitions constant, or both all-singletons) are identical
    partitions and score 1.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape != b.shape:
        raise ValueError("labelings must have equal length")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least two items")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    na, nb = ai.max() + 1, bi.max() + 1
    table = np.zeros((na, nb), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    sum_cells = _comb2(table).sum()
    sum_rows = _comb2(table.sum(axis=1)).sum()
    sum_cols = _comb2(table.sum(axis=0)).sum()
    total = _comb2(np.int64(n))
    expected = sum_rows * sum_cols / total
    maximum = 0.5 * (sum_rows + sum_cols)
    if maximum == expected:
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def shared_labels(partitions, mapping: SharedMapping) -> np.ndarray:
    """Pooled binary vector: 1 where a vertex's block is shared, over all graphs."""
    parts = list(partitions)
    out = []
    for p, shared in zip(parts, mapping.shared_sets()):
        mask = np.isin(p.assignment, list(shared)) if shared else np.zeros(p.num_vertices, bool)
        out.append(mask.astype(np.int64))
    return np.concatenate(out) if out else np.zeros(0, np.int64)


def shared_ari(partitions, mapping: SharedMapping,
               true_partitions, true_mapping: SharedMapping) -> float:
    """ARI between inferred and true shared-vs-not vertex labelings, pooled
    across all graphs. When both labelings are constant the score is 1 if
    they agree in value and 0 otherwise."""
    inferred = shared_labels(partitions, mapping)
    truth = shared_labels(true_partitions, true_mapping)
    if inferred.shape != truth.shape:
        raise ValueError("partition sizes disagree between inferred and truth")
    inferred_const = (inferred == inferred[0]).all()
    truth_const = (truth == truth[0]).all()
    if inferred_const and truth_const:
        return 1.0 if inferred[0] == truth[0] else 0.0
    return ari(inferred, truth)


@dataclass
class EvalReport:
    partition_ari: list[float]
    mean_partition_ari: float
    shared_ari: float | None
    log_likelihood: float | None = None
    bic: float | None = None
    extras: dict = field(default_factory=dict)


def evaluate_recovery(partitions, mapping, true_partitions, true_mapping,
                      log_likelihood=None, bic=None) -> EvalReport:
    per_graph = [
        ari(p.assignment, t.assignment) for p, t in zip(partitions, true_partitions)
    ]
    s_ari = None
    if mapping is not None and true_mapping is not None:
        s_ari = shared_ari(partitions, mapping, true_partitions, true_mapping)
    return EvalReport(
        partition_ari=per_graph,
        mean_partition_ari=float(np.mean(per_graph)) if per_graph else float("nan"),
        shared_ari=s_ari,
        log_likelihood=log_likelihood,
        bic=bic,
    )

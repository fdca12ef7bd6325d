"""Stochastic block models with shared blocks across multiple graphs.

Fit per-graph vertex partitions by annealed MCMC, choose which blocks to
share by exact or greedy optimization of the pooled Bernoulli likelihood,
and score the result (ARI, shared-block ARI, BIC).
"""

from .graph import Graph, EdgeListError, load_edge_list, save_edge_list
from .blocks import (
    Partition,
    BlockCounts,
    SharedMapping,
    InfeasibleSharedError,
    compute_block_counts,
    move_vertex,
    load_partition,
    save_partition,
    load_mapping,
    save_mapping,
)
from .likelihood import (
    ThetaMatrix,
    ModelScore,
    SharedState,
    mle_theta,
    shared_theta,
    log_likelihood,
    mle_log_likelihood,
    shared_log_likelihood,
    theta_matrices,
    delta_log_likelihood_move,
    bic,
)
from .select import (
    TupleSpace,
    PairScores,
    SelectionResult,
    pair_scores,
    select_exact,
    select_greedy,
    select_random,
    relabel_shared_first,
)
from .fit import (
    McmcConfig,
    FitResult,
    STRATEGIES,
    propose_move,
    accept_probability,
    mcmc_fit,
    multilevel_init,
    pipeline,
)
from .synth import PlantedInstance, generate, add_noise
from .metrics import ari, shared_ari, shared_labels, EvalReport, evaluate_recovery

__version__ = "0.1.0"

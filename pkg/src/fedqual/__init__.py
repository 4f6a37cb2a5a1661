"""Quality-aware federated label distribution learning, desk scale."""

from .aggregation import (
    AggregationConfig,
    ClientSummary,
    aggregate,
    anneal_schedule,
    annealed_score,
    effective_info,
    round_weights,
    soft_weights,
)
from .calibration import CalibrationConfig, compute_alpha, intervention_level
from .config import ALGORITHMS, FederationConfig, config_from_dict, load_config
from .data import (
    ClientShard,
    FederationData,
    PartitionConfig,
    assign_quality,
    build_federation_data,
    dirichlet_partition,
    generate_ground_truth,
    read_shards,
    simulate_fer_annotators,
    simulate_iqa_annotators,
    top_k_support,
    write_shards,
)
from .errors import ConfigError
from .federation import (
    AlgorithmProfile,
    FederationRun,
    RoundReport,
    algorithm_profile,
    run_federation,
    select_clients,
    sweep,
)
from .learner import (
    Example,
    LocalTrainConfig,
    ModelParams,
    forward,
    joint_grad,
    joint_loss,
    local_train,
    softmax,
)
from .metrics import (
    MetricReport,
    canberra,
    chebyshev,
    clark,
    cosine,
    intersection,
    kl_divergence,
    mean_report,
    report,
    validate_distribution,
)
from .reporting import export_csv, export_sweep_summary
from .theory import (
    ClientRiskProfile,
    empirical_profile_sweep,
    lambda_star,
    surrogate_risk,
    theorem_gap,
    uniform_lambda_star,
)

__version__ = "0.1.0"

from .agent import (
    ActionSet,
    Hyperparameters,
    ReplayBuffer,
    Transition,
    apply_action,
    compute_reward,
    dqn_train_step,
    select_action,
)
from .features import DegenerateInputError, N_FEATURES, featurize, features_from_rates
from .qnet import QNetwork
from .store import (
    FORMAT_VERSION,
    PolicyLoadError,
    TrainedPolicy,
    load_policies,
    load_policy,
    policy_file_name,
    save_policies,
    save_policy,
)
from .training import (
    CapacityEnv,
    evaluate_policy,
    tracking_score,
    train_best_policy,
    train_policy,
)

__all__ = [
    "ActionSet",
    "Hyperparameters",
    "ReplayBuffer",
    "Transition",
    "apply_action",
    "compute_reward",
    "dqn_train_step",
    "select_action",
    "DegenerateInputError",
    "N_FEATURES",
    "featurize",
    "features_from_rates",
    "QNetwork",
    "FORMAT_VERSION",
    "PolicyLoadError",
    "TrainedPolicy",
    "load_policies",
    "load_policy",
    "policy_file_name",
    "save_policies",
    "save_policy",
    "CapacityEnv",
    "evaluate_policy",
    "tracking_score",
    "train_best_policy",
    "train_policy",
]

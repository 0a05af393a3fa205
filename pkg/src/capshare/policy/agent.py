"""Per-tenant DQN agent pieces: actions, replay, reward, one train step.

Each tenant runs an independent agent over its own state and reward; the
only coupling between agents happens through the environment (they share
the cell).  The default action set is the three-way increase/keep/
decrease step; a nine-way multiple-step set is available when a wider
output layer is wanted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from capshare.nrm import (
    CellConfig,
    ConfigurationError,
    RRMPolicyRatio,
    TenantSla,
    mcbr_ratio_bound,
)

from .features import N_FEATURES
from .qnet import QNetwork


@dataclass(frozen=True)
class ActionSet:
    """Ordered ratio deltas in percent; must be symmetric and contain 0."""

    deltas: tuple

    def __post_init__(self):
        if not self.deltas:
            raise ConfigurationError("empty action set")
        if 0 not in self.deltas:
            raise ConfigurationError("action set must contain the keep action 0")
        if set(self.deltas) != {-d for d in self.deltas}:
            raise ConfigurationError(f"action set {self.deltas} not symmetric around 0")
        if list(self.deltas) != sorted(set(self.deltas)):
            raise ConfigurationError(f"action set {self.deltas} not strictly increasing")

    @classmethod
    def three(cls, step: int = 3) -> "ActionSet":
        return cls((-step, 0, step))

    @classmethod
    def nine(cls, step: int = 3) -> "ActionSet":
        return cls(tuple(k * step for k in range(-4, 5)))

    @property
    def size(self) -> int:
        return len(self.deltas)


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray


class ReplayBuffer:
    """Ring buffer over preallocated arrays; oldest entries evicted first.

    Storage grows geometrically toward ``capacity`` so that paper-scale
    capacities (10^7) do not allocate gigabytes up front.
    """

    def __init__(self, capacity: int, n_features: int = N_FEATURES):
        if capacity < 1:
            raise ConfigurationError(f"buffer capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._n_features = n_features
        self._allocated = min(capacity, 16384)
        self._states = np.empty((self._allocated, n_features))
        self._actions = np.empty(self._allocated, dtype=int)
        self._rewards = np.empty(self._allocated)
        self._next_states = np.empty((self._allocated, n_features))
        self._count = 0  # total appends ever

    def __len__(self) -> int:
        return min(self._count, self.capacity)

    def _grow(self):
        new = min(self.capacity, self._allocated * 2)
        self._states = np.resize(self._states, (new, self._n_features))
        self._actions = np.resize(self._actions, new)
        self._rewards = np.resize(self._rewards, new)
        self._next_states = np.resize(self._next_states, (new, self._n_features))
        self._allocated = new

    def append(self, transition: Transition):
        index = self._count % self.capacity
        while index >= self._allocated:
            self._grow()
        self._states[index] = transition.state
        self._actions[index] = transition.action
        self._rewards[index] = transition.reward
        self._next_states[index] = transition.next_state
        self._count += 1

    def sample(self, batch: int, rng: np.random.Generator):
        """Uniform mini-batch without replacement within the batch."""
        size = len(self)
        if batch > size:
            raise ValueError(f"cannot sample {batch} from buffer of {size}")
        idx = rng.choice(size, size=batch, replace=False)
        return (
            self._states[idx],
            self._actions[idx],
            self._rewards[idx],
            self._next_states[idx],
        )

    def entries(self) -> list:
        """Live transitions oldest-first (test hook, copies data)."""
        out = []
        start = self._count - len(self)
        for i in range(start, self._count):
            j = i % self.capacity
            out.append(
                Transition(
                    self._states[j].copy(),
                    int(self._actions[j]),
                    float(self._rewards[j]),
                    self._next_states[j].copy(),
                )
            )
        return out


def select_action(
    qvalues: np.ndarray,
    epsilon: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> int:
    """Epsilon-greedy index; ties at the max go to the lowest index."""
    qvalues = np.asarray(qvalues, dtype=float)
    if qvalues.size == 0:
        raise ValueError("empty Q-value vector")
    if epsilon > 0.0:
        if rng is None:
            raise ValueError("epsilon > 0 requires an RNG")
        if rng.random() < epsilon:
            return int(rng.integers(qvalues.size))
    return int(np.argmax(qvalues))


def apply_action(
    ratio: RRMPolicyRatio,
    action_delta: int,
    sla: TenantSla,
    cell: CellConfig,
) -> RRMPolicyRatio:
    """New policy ratio after one action, clamped to [0, MCBR-derived bound]."""
    bound = mcbr_ratio_bound(sla, cell)
    new = min(max(ratio.dedicated_ratio + action_delta, 0), bound)
    return RRMPolicyRatio(ratio.snssai, new)


def compute_reward(
    served_mbps: float,
    offered_mbps: float,
    assigned_mbps: float,
    sla: TenantSla,
    cell: CellConfig,
    overprovision_weight: float = 0.5,
) -> float:
    """SLA satisfaction minus weighted overprovisioning, in (-weight, 1].

    Satisfaction is 1 when the served rate covers the SLA-relevant demand
    min(offered, SAGBR), fractional below it; the penalty charges capacity
    assigned beyond both demand and actual use.
    """
    for name, value in (
        ("served", served_mbps),
        ("offered", offered_mbps),
        ("assigned", assigned_mbps),
    ):
        if value < 0:
            raise ValueError(f"{name} rate must be >= 0, got {value}")
    demand = min(offered_mbps, sla.sagbr_mbps)
    if served_mbps >= demand - 1e-6:
        satisfaction = 1.0
    else:
        satisfaction = served_mbps / max(demand, 1e-6)
    overprovision = max(0.0, assigned_mbps - max(served_mbps, offered_mbps))
    return satisfaction - overprovision_weight * overprovision / cell.capacity_mbps


@dataclass
class Hyperparameters:
    initial_collect_steps: int = 50
    max_train_steps: int = 200_000
    buffer_len: int = 10_000_000
    batch_size: int = 512
    learning_rate: float = 1e-4
    discount: float = 0.9
    epsilon: float = 0.1
    # Steps over which behavior epsilon anneals linearly from 1.0 down to
    # ``epsilon``; 0 keeps it constant after the collect phase.
    epsilon_decay_steps: int = 0
    # Step size at the end of the run; equal to learning_rate means a
    # constant schedule.  Decaying it stops late batches from jittering
    # the learned action boundaries.
    final_learning_rate: float = 0.0
    # Gradient updates per environment step.  Raising it buys more
    # optimization out of a fixed interaction budget, which is what a
    # short desk run is starved of.
    updates_per_step: int = 1
    target_sync_period: int = 500
    # Every this many steps the greedy policy is scored on a held-out
    # rollout and the best snapshot is kept; 0 returns the final nets.
    validation_period: int = 0

    def __post_init__(self):
        positive = (
            self.initial_collect_steps,
            self.max_train_steps,
            self.buffer_len,
            self.batch_size,
            self.learning_rate,
            self.target_sync_period,
        )
        if any(v <= 0 for v in positive):
            raise ConfigurationError(f"hyperparameters must be positive: {self}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigurationError(f"epsilon {self.epsilon} outside [0, 1]")
        if not 0.0 <= self.discount < 1.0:
            raise ConfigurationError(f"discount {self.discount} outside [0, 1)")
        if self.epsilon_decay_steps < 0:
            raise ConfigurationError("epsilon_decay_steps must be >= 0")
        if self.final_learning_rate < 0:
            raise ConfigurationError("final_learning_rate must be >= 0")
        if self.updates_per_step < 1:
            raise ConfigurationError("updates_per_step must be >= 1")
        if self.validation_period < 0:
            raise ConfigurationError("validation_period must be >= 0")

    def epsilon_at(self, step: int) -> float:
        """Behavior epsilon for a training step (after the collect phase)."""
        if self.epsilon_decay_steps <= 0 or step >= self.epsilon_decay_steps:
            return self.epsilon
        fraction = step / self.epsilon_decay_steps
        return 1.0 + fraction * (self.epsilon - 1.0)

    def learning_rate_at(self, step: int) -> float:
        """SGD step size for a training step (linear decay across the run)."""
        if self.final_learning_rate <= 0.0:
            return self.learning_rate
        span = max(1, self.max_train_steps - 1)
        fraction = min(1.0, step / span)
        return self.learning_rate + fraction * (
            self.final_learning_rate - self.learning_rate
        )

    @classmethod
    def paper(cls) -> "Hyperparameters":
        """The published training configuration (hours of CPU time)."""
        return cls()

    @classmethod
    def desk_scale(cls) -> "Hyperparameters":
        """Small configuration that trains in under a minute for CI and demos.

        Plain SGD needs a far larger step size than the published training
        rate to converge within 10^4 steps, and the short run leans on
        exploration annealing, a decaying step size, extra replay updates,
        and held-out snapshot selection to make the outcome usable.
        """
        return cls(
            max_train_steps=10_000,
            buffer_len=100_000,
            batch_size=64,
            learning_rate=3e-3,
            final_learning_rate=1e-3,
            updates_per_step=2,
            epsilon_decay_steps=5_000,
            target_sync_period=150,
            validation_period=1_000,
        )


def dqn_train_step(
    buffer: ReplayBuffer,
    net: QNetwork,
    target_net: QNetwork,
    hyper: Hyperparameters,
    rng: np.random.Generator,
    learning_rate: Optional[float] = None,
) -> Optional[float]:
    """One SGD step on the TD objective; None while the buffer is underfull.

    ``learning_rate`` overrides the configured constant rate so an outer
    loop can apply a schedule.
    """
    if len(buffer) < hyper.batch_size:
        return None
    states, actions, rewards, next_states = buffer.sample(hyper.batch_size, rng)
    next_q = target_net.forward_batch(next_states)
    targets = rewards + hyper.discount * next_q.max(axis=1)
    loss, grads = net.td_gradients(states, actions, targets)
    if not math.isfinite(loss):
        raise RuntimeError(f"training diverged: non-finite loss {loss}")
    net.sgd_step(grads, hyper.learning_rate if learning_rate is None else learning_rate)
    return loss

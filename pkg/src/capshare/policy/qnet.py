"""Fully connected Q-network (7 -> hidden -> |actions|) in plain numpy.

Forward pass, hand-written backward pass for the TD regression loss, and
a vanilla SGD update.  Everything is float64 and deterministic given the
initialization RNG, which is what makes training runs reproducible down
to the serialized policy bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from capshare.nrm import ConfigurationError

from .features import N_FEATURES

DEFAULT_HIDDEN = 100


@dataclass
class QNetwork:
    w1: np.ndarray  # (hidden, inputs)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (actions, hidden)
    b2: np.ndarray  # (actions,)

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=float)
        self.b1 = np.asarray(self.b1, dtype=float)
        self.w2 = np.asarray(self.w2, dtype=float)
        self.b2 = np.asarray(self.b2, dtype=float)
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise ConfigurationError("weight matrices must be 2-dimensional")
        hidden, _ = self.w1.shape
        if self.b1.shape != (hidden,):
            raise ConfigurationError(
                f"b1 shape {self.b1.shape} inconsistent with w1 {self.w1.shape}"
            )
        if self.w2.shape[1] != hidden:
            raise ConfigurationError(
                f"w2 shape {self.w2.shape} inconsistent with hidden width {hidden}"
            )
        if self.b2.shape != (self.w2.shape[0],):
            raise ConfigurationError(
                f"b2 shape {self.b2.shape} inconsistent with w2 {self.w2.shape}"
            )

    @classmethod
    def initialize(
        cls,
        n_actions: int,
        rng: np.random.Generator,
        n_inputs: int = N_FEATURES,
        hidden: int = DEFAULT_HIDDEN,
    ) -> "QNetwork":
        """He-scaled normal init for the ReLU layer, zero biases."""
        return cls(
            w1=rng.normal(0.0, math.sqrt(2.0 / n_inputs), size=(hidden, n_inputs)),
            b1=np.zeros(hidden),
            w2=rng.normal(0.0, math.sqrt(2.0 / hidden), size=(n_actions, hidden)),
            b2=np.zeros(n_actions),
        )

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[1]

    @property
    def n_actions(self) -> int:
        return self.w2.shape[0]

    def forward(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        if state.shape != (self.n_inputs,):
            raise ConfigurationError(
                f"state shape {state.shape}, network expects ({self.n_inputs},)"
            )
        hidden = np.maximum(self.w1 @ state + self.b1, 0.0)
        return self.w2 @ hidden + self.b2

    def forward_batch(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        if states.ndim != 2 or states.shape[1] != self.n_inputs:
            raise ConfigurationError(
                f"batch shape {states.shape}, network expects (*, {self.n_inputs})"
            )
        hidden = np.maximum(states @ self.w1.T + self.b1, 0.0)
        return hidden @ self.w2.T + self.b2

    def td_gradients(self, states, actions, targets):
        """Loss and parameter gradients for mean squared TD error.

        loss = mean_i (Q(s_i)[a_i] - y_i)^2 over the mini-batch.
        Returns ``(loss, grads)`` with grads keyed like the fields.
        """
        states = np.asarray(states, dtype=float)
        actions = np.asarray(actions, dtype=int)
        targets = np.asarray(targets, dtype=float)
        batch = states.shape[0]

        z1 = states @ self.w1.T + self.b1  # (B, H)
        h = np.maximum(z1, 0.0)
        q = h @ self.w2.T + self.b2  # (B, A)

        picked = q[np.arange(batch), actions]
        error = picked - targets
        loss = float(np.mean(error**2))

        dq = np.zeros_like(q)
        dq[np.arange(batch), actions] = 2.0 * error / batch
        grads = {
            "w2": dq.T @ h,
            "b2": dq.sum(axis=0),
        }
        dh = dq @ self.w2
        dz1 = dh * (z1 > 0.0)
        grads["w1"] = dz1.T @ states
        grads["b1"] = dz1.sum(axis=0)
        return loss, grads

    def sgd_step(self, grads: dict, learning_rate: float):
        self.w1 -= learning_rate * grads["w1"]
        self.b1 -= learning_rate * grads["b1"]
        self.w2 -= learning_rate * grads["w2"]
        self.b2 -= learning_rate * grads["b2"]

    def clone(self) -> "QNetwork":
        return QNetwork(
            self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy()
        )

    def copy_from(self, other: "QNetwork"):
        self.w1[...] = other.w1
        self.b1[...] = other.b1
        self.w2[...] = other.w2
        self.b2[...] = other.b2

"""Trained policy persistence: one JSON file per tenant.

The container is versioned and fully self-describing (action set,
feature normalization constants, row-major weight matrices).  Writing is
canonical, so identical policies produce identical bytes, and loading a
saved policy reproduces its greedy decisions exactly: floats go through
repr round-tripping, never through decimal truncation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from capshare.nrm import ConfigurationError

from .agent import ActionSet
from .features import N_FEATURES
from .qnet import QNetwork

FORMAT_VERSION = 1


class PolicyLoadError(Exception):
    """Unreadable, corrupt, or version-incompatible policy file."""


def _identity_offset() -> np.ndarray:
    return np.zeros(N_FEATURES)


def _identity_scale() -> np.ndarray:
    return np.ones(N_FEATURES)


@dataclass
class TrainedPolicy:
    snssai_id: int
    actions: ActionSet
    network: QNetwork
    # Features are engineered into fixed ranges already; the stored
    # normalization is the identity but remains part of the contract so a
    # future policy can ship different constants without a format bump.
    feature_offset: np.ndarray = field(default_factory=_identity_offset)
    feature_scale: np.ndarray = field(default_factory=_identity_scale)

    def __post_init__(self):
        self.feature_offset = np.asarray(self.feature_offset, dtype=float)
        self.feature_scale = np.asarray(self.feature_scale, dtype=float)
        n = self.network.n_inputs
        if self.feature_offset.shape != (n,) or self.feature_scale.shape != (n,):
            raise ConfigurationError(
                "feature normalization constants must match the input width"
            )
        if np.any(self.feature_scale == 0):
            raise ConfigurationError("feature scale must be non-zero")
        if self.actions.size != self.network.n_actions:
            raise ConfigurationError(
                f"action set size {self.actions.size} != network outputs "
                f"{self.network.n_actions}"
            )

    def q_values(self, state: np.ndarray) -> np.ndarray:
        normalized = (np.asarray(state, dtype=float) - self.feature_offset) / self.feature_scale
        return self.network.forward(normalized)

    def greedy_action(self, state: np.ndarray) -> int:
        return int(np.argmax(self.q_values(state)))

    def greedy_delta(self, state: np.ndarray) -> int:
        return self.actions.deltas[self.greedy_action(state)]


def policy_file_name(snssai_id: int) -> str:
    return f"policy_snssai_{snssai_id}.json"


def save_policy(policy: TrainedPolicy, path) -> Path:
    path = Path(path)
    document = {
        "format_version": FORMAT_VERSION,
        "snssai_id": policy.snssai_id,
        "actions": list(policy.actions.deltas),
        "feature_offset": policy.feature_offset.tolist(),
        "feature_scale": policy.feature_scale.tolist(),
        "w1": policy.network.w1.tolist(),
        "b1": policy.network.b1.tolist(),
        "w2": policy.network.w2.tolist(),
        "b2": policy.network.b2.tolist(),
    }
    path.write_text(json.dumps(document, sort_keys=True) + "\n")
    return path


def load_policy(path) -> TrainedPolicy:
    path = Path(path)
    try:
        document = json.loads(path.read_text())
    except OSError as exc:
        raise PolicyLoadError(f"cannot read policy file {path}: {exc}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PolicyLoadError(f"corrupt policy file {path}: {exc}") from exc
    if not isinstance(document, dict):
        raise PolicyLoadError(f"corrupt policy file {path}: not an object")
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise PolicyLoadError(
            f"policy file {path} has format version {version!r}, "
            f"this build reads version {FORMAT_VERSION}"
        )
    try:
        return TrainedPolicy(
            snssai_id=int(document["snssai_id"]),
            actions=ActionSet(tuple(document["actions"])),
            network=QNetwork(
                w1=np.array(document["w1"], dtype=float),
                b1=np.array(document["b1"], dtype=float),
                w2=np.array(document["w2"], dtype=float),
                b2=np.array(document["b2"], dtype=float),
            ),
            feature_offset=np.array(document["feature_offset"], dtype=float),
            feature_scale=np.array(document["feature_scale"], dtype=float),
        )
    except (KeyError, TypeError, ValueError, ConfigurationError) as exc:
        raise PolicyLoadError(f"invalid policy file {path}: {exc}") from exc


def save_policies(policies: dict, directory) -> list:
    """Write one file per tenant into ``directory``; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [
        save_policy(policy, directory / policy_file_name(snssai_id))
        for snssai_id, policy in sorted(policies.items())
    ]


def load_policies(directory, snssai_ids) -> dict:
    """Load the policy of every given tenant; any missing file is an error."""
    directory = Path(directory)
    policies = {}
    for snssai_id in snssai_ids:
        path = directory / policy_file_name(snssai_id)
        if not path.exists():
            raise PolicyLoadError(f"no policy for S-NSSAI {snssai_id}: {path} missing")
        policy = load_policy(path)
        if policy.snssai_id != snssai_id:
            raise PolicyLoadError(
                f"{path} declares S-NSSAI {policy.snssai_id}, expected {snssai_id}"
            )
        policies[snssai_id] = policy
    return policies

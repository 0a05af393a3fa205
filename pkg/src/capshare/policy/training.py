"""Desk-scale DQN training over a fast in-process environment.

Training bypasses the wire protocols entirely: the environment applies
the same allocation rule and feature formulas the simulator and rApp
use, but as direct function calls, so a training run is a tight numpy
loop.  Inference over the real O1 path uses the very same features, so
policies transfer without adjustment.

Episodes alternate between held random load levels (teaching the map
from a fixed demand to the right ratio) and random segments of the
weekly profiles (teaching ramp tracking); ratios are re-randomized at
every episode start.
"""
from __future__ import annotations

import dataclasses
from typing import Callable, Optional

import numpy as np

from capshare import nrm
from capshare.odu.traffic import TrafficProfile, get_profile, offered_load

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
from .features import features_from_rates
from .qnet import QNetwork
from .store import TrainedPolicy


class CapacityEnv:
    """Two-mode training environment over the capacity allocation rule.

    A state is what the agent would see after a PM period: its own ratio
    plus the period's PRB/throughput measurements.  ``step`` applies one
    ratio delta per tenant, plays the next period, and returns the new
    states and per-tenant rewards.
    """

    def __init__(
        self,
        scenario: nrm.ScenarioConfig,
        seed: int = 0,
        episode_len: int = 40,
        stationary_prob: float = 0.5,
        stationary_only: bool = False,
        action_set: Optional[ActionSet] = None,
        max_level_fraction: float = 1.05,
        max_joint_fraction: float = 1.15,
        overprovision_weight: float = 0.5,
        curriculum: bool = True,
    ):
        problems = nrm.validate_scenario(scenario)
        if problems:
            raise nrm.ConfigurationError("; ".join(problems))
        self.scenario = scenario
        self.cell = scenario.cell
        self.action_set = action_set or ActionSet.three(scenario.action_step_pct)
        self.episode_len = episode_len
        self.stationary_prob = stationary_prob
        self.stationary_only = stationary_only
        self.max_level_fraction = max_level_fraction
        self.max_joint_fraction = max_joint_fraction
        # With the curriculum off, stationary levels are independent and
        # episode-start ratios uniform: the plain environment used for
        # policy-vs-random comparisons.
        self.curriculum = curriculum
        n = len(scenario.tenants)
        if np.isscalar(overprovision_weight):
            self.overprovision_weights = [float(overprovision_weight)] * n
        else:
            self.overprovision_weights = [float(w) for w in overprovision_weight]
            if len(self.overprovision_weights) != n:
                raise nrm.ConfigurationError(
                    "need one overprovision weight per tenant"
                )
        self.snssai_ids = [t.snssai.id for t in scenario.tenants]
        self._profiles: list[TrafficProfile] = [
            t.profile if isinstance(t.profile, TrafficProfile) else get_profile(t.profile)
            for t in scenario.tenants
        ]
        self._bounds = [
            nrm.mcbr_ratio_bound(t.sla, scenario.cell) for t in scenario.tenants
        ]
        self._rng = np.random.default_rng(seed)
        self._ratios: list[nrm.RRMPolicyRatio] = []
        self._stationary = False
        self._levels: list[float] = []
        self._t = 0.0
        self._steps_in_episode = 0

    def _sample_offered(self) -> list[float]:
        if self._stationary:
            noise_scale = self.scenario.noise_std * self.cell.capacity_mbps
            return [
                max(0.0, level + self._rng.normal(0.0, noise_scale))
                for level in self._levels
            ]
        return [
            offered_load(profile, self._t, self.cell.capacity_mbps, self._rng)
            for profile in self._profiles
        ]

    def _play_period(self, offered):
        served = nrm.allocate_capacity(
            offered, self._ratios, self.cell, self.scenario.slas
        )
        # Nominal claim, deliberately not the post-scaling share: holding an
        # oversubscribed ratio must cost reward even when the other tenant's
        # demand soaks up the difference, or agents learn to park high.
        assigned = [
            r.dedicated_ratio * self.cell.capacity_mbps / 100.0
            for r in self._ratios
        ]
        return served, assigned

    def _states(self, served) -> list[np.ndarray]:
        cell = self.cell
        used = [cell.total_prb * s / cell.capacity_mbps for s in served]
        total_used = sum(used)
        return [
            features_from_rates(
                ratio_pct=self._ratios[k].dedicated_ratio,
                own_used_prb=used[k],
                others_used_prb=total_used - used[k],
                available_prb=cell.total_prb,
                throughput_mbps=served[k],
                sla=tenant.sla,
                cell=cell,
            )
            for k, tenant in enumerate(self.scenario.tenants)
        ]

    def _base_offered(self) -> list[float]:
        """Noise-free demand at the episode anchor point."""
        if self._stationary:
            return list(self._levels)
        return [
            offered_load(profile, self._t, self.cell.capacity_mbps)
            for profile in self._profiles
        ]

    def reset(self) -> list[np.ndarray]:
        """Start an episode; the returned states describe a played-out period."""
        self._stationary = self.stationary_only or (
            self._rng.random() < self.stationary_prob
        )
        if self._stationary:
            if self.curriculum:
                # Correlated draw with a joint cap: independent levels put
                # half the episodes in deep combined overload, where no
                # ratio choice helps and the reward carries little signal.
                order = self._rng.permutation(len(self.scenario.tenants))
                fractions = [0.0] * len(order)
                budget = self.max_joint_fraction
                for idx in order:
                    f = float(
                        self._rng.uniform(
                            0.0, min(self.max_level_fraction, max(0.15, budget))
                        )
                    )
                    fractions[idx] = f
                    budget -= f
            else:
                fractions = [
                    float(self._rng.uniform(0.0, self.max_level_fraction))
                    for _ in self.scenario.tenants
                ]
            self._levels = [f * self.cell.capacity_mbps for f in fractions]
        else:
            self._t = float(self._rng.uniform(0.0, 7 * 86400.0))
        # Mix uniform ratio starts with starts planted far from the
        # current demand (so the climb and the walk back down both show up
        # in the replay buffer) and starts just above it (the gentle
        # over-assignment penalty needs dense samples near the boundary or
        # the fitted action flip settles far above where it belongs).
        base = self._base_offered()
        self._ratios = []
        for k, (tenant, bound) in enumerate(
            zip(self.scenario.tenants, self._bounds)
        ):
            demand_pct = (
                100.0
                * min(base[k], tenant.sla.sagbr_mbps)
                / self.cell.capacity_mbps
            )
            u = 0.0 if not self.curriculum else self._rng.random()
            if u < 0.40:
                start = int(self._rng.integers(0, bound + 1))
            elif u < 0.55:
                start = int(round(demand_pct + self._rng.uniform(15.0, 50.0)))
            elif u < 0.70:
                start = int(round(demand_pct - self._rng.uniform(15.0, 50.0)))
            else:
                start = int(round(demand_pct + self._rng.uniform(3.0, 18.0)))
            self._ratios.append(
                nrm.RRMPolicyRatio(tenant.snssai, min(bound, max(0, start)))
            )
        self._steps_in_episode = 0
        served, _ = self._play_period(self._sample_offered())
        return self._states(served)

    def step(self, action_indices):
        """Apply one delta per tenant, play a period.

        Returns ``(next_states, rewards, episode_end)``; after a True
        flag the caller must ``reset`` before stepping again.
        """
        deltas = [self.action_set.deltas[int(i)] for i in action_indices]
        self._ratios = [
            apply_action(ratio, delta, tenant.sla, self.cell)
            for ratio, delta, tenant in zip(
                self._ratios, deltas, self.scenario.tenants
            )
        ]
        if not self._stationary:
            self._t += self.scenario.delta_t_s
        offered = self._sample_offered()
        served, assigned = self._play_period(offered)
        rewards = [
            compute_reward(
                served[k],
                offered[k],
                assigned[k],
                tenant.sla,
                self.cell,
                overprovision_weight=self.overprovision_weights[k],
            )
            for k, tenant in enumerate(self.scenario.tenants)
        ]
        self._steps_in_episode += 1
        done = self._steps_in_episode >= self.episode_len
        return self._states(served), rewards, done


def tracking_score(
    scenario: nrm.ScenarioConfig,
    policies: dict,
    start_day: int = 4,
    steps: int = 960,
    noise_seed: Optional[int] = None,
) -> float:
    """Deterministic greedy-rollout score used for snapshot selection.

    Plays two profile days (Friday and Saturday by default, so both day
    types appear) and folds the two run-level quality metrics into one
    number: worst-tenant satisfaction, capped at 0.95, counts double;
    utilization counts once, capped at 0.80.  The caps stop the selection
    from chasing one metric past the point of usefulness at the expense
    of the other.

    ``noise_seed`` adds the scenario's demand noise from a fixed stream.
    Scoring with noise matters when comparing policies that never trained
    together: a pairing can look perfect on the noise-free path yet sit
    near a cliff where one perturbation tips both agents into walking
    their ratios down in lockstep.
    """
    cell = scenario.cell
    slas = [t.sla for t in scenario.tenants]
    profiles = [
        t.profile if isinstance(t.profile, TrafficProfile) else get_profile(t.profile)
        for t in scenario.tenants
    ]
    profiles = [
        dataclasses.replace(profile, noise_std=scenario.noise_std)
        for profile in profiles
    ]
    rng = None if noise_seed is None else np.random.default_rng(noise_seed)
    ratios = [
        nrm.RRMPolicyRatio(t.snssai, t.initial_ratio) for t in scenario.tenants
    ]
    sat = [0] * len(slas)
    util_sum = 0.0
    for step in range(steps):
        t = start_day * 86400.0 + step * scenario.delta_t_s
        offered = [
            offered_load(profile, t, cell.capacity_mbps, rng)
            for profile in profiles
        ]
        served = nrm.allocate_capacity(offered, ratios, cell, slas)
        assigned = [
            ratio.dedicated_ratio * cell.capacity_mbps / 100.0 for ratio in ratios
        ]
        for k, sla in enumerate(slas):
            if served[k] >= min(offered[k], sla.sagbr_mbps) - 1e-6:
                sat[k] += 1
        total_assigned = sum(assigned)
        if total_assigned > 0:
            util_sum += min(1.0, sum(served) / total_assigned)
        used = [cell.total_prb * s / cell.capacity_mbps for s in served]
        total_used = sum(used)
        ratios = [
            apply_action(
                ratios[k],
                policies[tenant.snssai.id].greedy_delta(
                    features_from_rates(
                        ratios[k].dedicated_ratio,
                        used[k],
                        total_used - used[k],
                        cell.total_prb,
                        served[k],
                        tenant.sla,
                        cell,
                    )
                ),
                tenant.sla,
                cell,
            )
            for k, tenant in enumerate(scenario.tenants)
        ]
    worst_sat = min(s / steps for s in sat)
    return 2.0 * min(worst_sat, 0.95) + min(util_sum / steps, 0.80)


def train_policy(
    env: CapacityEnv,
    hyper: Hyperparameters,
    seed: int,
    progress: Optional[Callable[[int, list], None]] = None,
) -> dict:
    """Train one independent agent per tenant; returns policies by S-NSSAI id.

    Deterministic given ``seed`` and the environment's own seed: RNG
    streams are spawned from one seed sequence, so two identical calls
    produce bit-identical policies.

    With ``hyper.validation_period > 0`` the greedy policy is scored
    periodically on a fixed noise-free rollout and the best snapshot is
    returned instead of the final one.  Short runs drift: a policy that
    has learned to track demand can unlearn the quiet-hour walk-down
    thousands of steps later, so keeping the best checkpoint makes the
    result far less sensitive to the training seed.
    """
    n_agents = len(env.snssai_ids)
    streams = np.random.SeedSequence(seed).spawn(2 * n_agents)
    behavior_rngs = [np.random.default_rng(s) for s in streams[:n_agents]]
    sample_rngs = [np.random.default_rng(s) for s in streams[n_agents:]]

    nets = [
        QNetwork.initialize(env.action_set.size, behavior_rngs[k])
        for k in range(n_agents)
    ]
    targets = [net.clone() for net in nets]
    buffers = [ReplayBuffer(hyper.buffer_len) for _ in range(n_agents)]
    losses: list[list] = [[] for _ in range(n_agents)]

    def held_out_score() -> float:
        snapshot = {
            sid: TrainedPolicy(sid, env.action_set, nets[k])
            for k, sid in enumerate(env.snssai_ids)
        }
        return tracking_score(env.scenario, snapshot)

    best_nets: Optional[list[QNetwork]] = None
    best_score = -np.inf

    states = env.reset()
    for step in range(hyper.max_train_steps):
        collecting = step < hyper.initial_collect_steps
        epsilon = 1.0 if collecting else hyper.epsilon_at(step)
        actions = [
            select_action(nets[k].forward(states[k]), epsilon, behavior_rngs[k])
            for k in range(n_agents)
        ]
        next_states, rewards, done = env.step(actions)
        for k in range(n_agents):
            buffers[k].append(
                Transition(states[k], actions[k], rewards[k], next_states[k])
            )
        if not collecting:
            lr = hyper.learning_rate_at(step)
            for _ in range(hyper.updates_per_step):
                for k in range(n_agents):
                    loss = dqn_train_step(
                        buffers[k],
                        nets[k],
                        targets[k],
                        hyper,
                        sample_rngs[k],
                        learning_rate=lr,
                    )
                    if loss is not None:
                        losses[k].append(loss)
        if (step + 1) % hyper.target_sync_period == 0:
            for k in range(n_agents):
                targets[k].copy_from(nets[k])
        if (
            hyper.validation_period > 0
            and (step + 1) % hyper.validation_period == 0
        ):
            score = held_out_score()
            if score > best_score:
                best_score = score
                best_nets = [net.clone() for net in nets]
        if progress is not None and (step + 1) % 1000 == 0:
            recent = [
                float(np.mean(l[-200:])) if l else float("nan") for l in losses
            ]
            progress(step + 1, recent)
        states = env.reset() if done else next_states

    if hyper.validation_period > 0:
        if held_out_score() <= best_score and best_nets is not None:
            nets = best_nets

    return {
        snssai_id: TrainedPolicy(snssai_id, env.action_set, nets[k])
        for k, snssai_id in enumerate(env.snssai_ids)
    }


def train_best_policy(
    scenario: nrm.ScenarioConfig,
    hyper: Hyperparameters,
    seed: int,
    restarts: int = 4,
    overprovision_weights: tuple = (1.4, 1.3, 1.5, 1.45),
    env_options: Optional[dict] = None,
    progress: Optional[Callable[[int, float], None]] = None,
) -> dict:
    """Run independent training restarts and keep the best policy set.

    A single short run lands anywhere on the spectrum between hoarding
    capacity and giving too much of it back; which one you get is luck of
    the draw.  Restarting from different initializations (and cycling the
    overprovision weight, which sets that trade-off) then picking the
    winner by ``tracking_score`` turns a lottery into a procedure that is
    still deterministic in ``seed``.  Training runs on a noise-free copy
    of the scenario; measurement noise belongs to evaluation, where the
    selected policy has to survive it anyway.

    ``progress``, when given, is called with ``(restart_index, score)``
    after each restart.
    """
    if restarts < 1:
        raise nrm.ConfigurationError("restarts must be >= 1")
    quiet = dataclasses.replace(scenario, noise_std=0.0)
    options = {"episode_len": 40, "stationary_prob": 0.3}
    options.update(env_options or {})
    sub_seeds = np.random.SeedSequence(seed).generate_state(restarts)
    # Finalists are compared on a full noisy week so the pick reflects
    # every day shape and survives demand noise, not just the cheap
    # noise-free two-day proxy used for checkpoint selection inside each
    # run.  The noise stream is fixed, so selection stays deterministic.
    week = dict(start_day=0, steps=3360, noise_seed=1234)
    candidates: list[dict] = []
    best: Optional[dict] = None
    best_score = -np.inf
    for r in range(restarts):
        weight = overprovision_weights[r % len(overprovision_weights)]
        env = CapacityEnv(
            quiet,
            seed=int(sub_seeds[r]),
            overprovision_weight=weight,
            **options,
        )
        candidate = train_policy(env, hyper, seed=int(sub_seeds[r]))
        candidates.append(candidate)
        score = tracking_score(scenario, candidate, **week)
        if progress is not None:
            progress(r, score)
        if score > best_score:
            best, best_score = dict(candidate), score
    assert best is not None
    # One restart often nails one tenant and fumbles the other, and the
    # agents are separate networks, so mix per-tenant picks across
    # restarts: coordinate ascent on the same full-week score.
    for _ in range(2):
        improved = False
        for sid in best:
            for candidate in candidates:
                if candidate[sid] is best[sid]:
                    continue
                trial = dict(best)
                trial[sid] = candidate[sid]
                score = tracking_score(scenario, trial, **week)
                if score > best_score:
                    best, best_score = trial, score
                    improved = True
        if not improved:
            break
    return best


def evaluate_policy(
    env: CapacityEnv,
    policies: Optional[dict],
    steps: int,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Mean per-tenant reward over ``steps``; ``policies=None`` plays
    uniform random actions (needs ``rng``) as the comparison baseline."""
    if policies is None and rng is None:
        raise ValueError("random baseline evaluation needs an RNG")
    states = env.reset()
    total = 0.0
    count = 0
    for _ in range(steps):
        if policies is None:
            actions = [
                int(rng.integers(env.action_set.size)) for _ in env.snssai_ids
            ]
        else:
            actions = [
                policies[snssai_id].greedy_action(states[k])
                for k, snssai_id in enumerate(env.snssai_ids)
            ]
        states, rewards, done = env.step(actions)
        total += sum(rewards)
        count += len(rewards)
        if done:
            states = env.reset()
    return total / count

"""Deterministic-policy actor-critic trainer with replay and soft targets.

The policy as deployed is actor -> minmax_action -> benchmark sign rule; the
actor update differentiates through that whole chain, so the critic is always
evaluated on actions the environment could actually receive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .market_data import AlignedMarket
from .neural import (
    Network,
    build_actor,
    build_critic,
    critic_input_batch,
    minmax_action,
    minmax_forward_batch,
    minmax_vjp_batch,
    save_checkpoint,
)
from .portfolio_math import enforce_arbitrage, enforce_arbitrage_batch
from .trading_env import EnvConfig, EnvState, TradingEnv, Transition


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    buffer_capacity: int = 600
    critic_lr: float = 5e-4
    actor_lr: float = 4e-5
    total_steps: int = 300_000
    noise_mean: float = 0.05
    noise_var: float = 0.25
    discount: float = 0.99
    tau: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if min(self.critic_lr, self.actor_lr, self.tau) <= 0:
            raise ConfigError("learning rates and tau must be positive")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ConfigError("need 1 <= batch_size <= buffer_capacity")
        if self.noise_var < 0:
            raise ConfigError("noise variance cannot be negative")
        if not 0.0 <= self.discount <= 1.0:
            raise ConfigError("discount must be in [0, 1]")
        if self.total_steps < 1:
            raise ConfigError("total_steps must be positive")


class ReplayBuffer:
    """Fixed-capacity ring; overwrites oldest first, samples uniformly with replacement."""

    def __init__(self, capacity: int = 600):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._storage: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._storage)

    def add(self, transition: Transition) -> None:
        if len(self._storage) < self.capacity:
            self._storage.append(transition)
        else:
            self._storage[self._cursor] = transition
        self._cursor = (self._cursor + 1) % self.capacity

    def ready(self, batch_size: int) -> bool:
        return len(self._storage) >= batch_size

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if not self.ready(batch_size):
            raise ValueError(f"buffer holds {len(self)} < batch {batch_size}")
        idx = rng.integers(0, len(self._storage), size=batch_size)
        return [self._storage[i] for i in idx]


def explore_action(raw: np.ndarray, rng: np.random.Generator,
                   noise_mean: float = 0.05, noise_var: float = 0.25) -> np.ndarray:
    """Add i.i.d. Gaussian noise to raw actor logits before the action activation."""
    raw = np.asarray(raw, dtype=np.float64)
    return raw + rng.normal(noise_mean, np.sqrt(noise_var), size=raw.shape)


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None
        self._t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self._t += 1
        b1t = 1.0 - self.beta1**self._t
        b2t = 1.0 - self.beta2**self._t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def soft_update(target: Network, online: Network, tau: float) -> None:
    """Blend online parameters into the target: theta_t <- tau*theta + (1-tau)*theta_t."""
    t_params, o_params = target.params(), online.params()
    if len(t_params) != len(o_params):
        raise ValueError("networks do not share a parameter layout")
    for tp, op in zip(t_params, o_params):
        if tp.shape != op.shape:
            raise ValueError(f"parameter shape mismatch {tp.shape} vs {op.shape}")
        tp *= 1.0 - tau
        tp += tau * op


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    start_step: int
    mean_daily_return: float
    final_value: float
    mean_cost: float


@dataclass
class TrainLog:
    records: list[EpisodeRecord] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "step", "mean_daily_return", "final_value", "mean_cost"])
            for r in self.records:
                writer.writerow([r.episode, r.start_step, repr(r.mean_daily_return),
                                 repr(r.final_value), repr(r.mean_cost)])


def _batch_arrays(batch: list[Transition]):
    states = np.stack([tr.state.tensor.data for tr in batch])
    actions = np.stack([tr.action for tr in batch])
    rewards = np.array([tr.reward for tr in batch])[:, None]
    next_states = np.stack([tr.next_state.tensor.data for tr in batch])
    dones = np.array([1.0 if tr.done else 0.0 for tr in batch])[:, None]
    return states, actions, rewards, next_states, dones


class DDPG:
    """Owns the four networks and their optimizers; updates are one Adam step each."""

    def __init__(self, actor: Network, critic: Network, config: TrainConfig,
                 arbitrage: bool = True):
        self.actor = actor
        self.critic = critic
        self.actor_target = actor.clone()
        self.critic_target = critic.clone()
        self.config = config
        self.arbitrage = arbitrage
        self._adam_actor = Adam(config.actor_lr)
        self._adam_critic = Adam(config.critic_lr)

    # -- acting ------------------------------------------------------------

    def act(self, state: EnvState, rng: np.random.Generator | None = None) -> np.ndarray:
        """Valid weight vector for a state; pass an rng to add exploration noise."""
        raw = self.actor.forward(state.tensor.data[None])[0]
        if rng is not None:
            raw = explore_action(raw, rng, self.config.noise_mean, self.config.noise_var)
        weights = minmax_action(raw)
        if self.arbitrage:
            weights = enforce_arbitrage(weights)
        return weights

    def _policy_batch(self, net: Network, states: np.ndarray) -> np.ndarray:
        raw = net.forward(states)
        weights = minmax_forward_batch(raw)[0]
        if self.arbitrage:
            weights = enforce_arbitrage_batch(weights)[0]
        return weights

    # -- updates -----------------------------------------------------------

    def critic_loss_and_grads(self, batch: list[Transition]) -> tuple[float, list[np.ndarray]]:
        states, actions, rewards, next_states, dones = _batch_arrays(batch)
        next_actions = self._policy_batch(self.actor_target, next_states)
        q_next = self.critic_target.forward(critic_input_batch(next_states, next_actions))
        targets = rewards + self.config.discount * (1.0 - dones) * q_next
        q = self.critic.forward(critic_input_batch(states, actions))
        diff = q - targets
        loss = float(np.mean(diff**2))
        self.critic.backward(2.0 * diff / diff.shape[0])
        return loss, [g.copy() for g in self.critic.grads()]

    def update_critic(self, batch: list[Transition]) -> float:
        loss, grads = self.critic_loss_and_grads(batch)
        self._adam_critic.step(self.critic.params(), grads)
        return loss

    def actor_objective_and_grads(self, batch: list[Transition]) -> tuple[float, list[np.ndarray]]:
        states = np.stack([tr.state.tensor.data for tr in batch])
        raw = self.actor.forward(states)
        weights, cache = minmax_forward_batch(raw)
        if self.arbitrage:
            weights, flipped = enforce_arbitrage_batch(weights)
        q = self.critic.forward(critic_input_batch(states, weights))
        objective = float(np.mean(q))

        d_input = self.critic.backward(np.full_like(q, 1.0 / q.shape[0]))
        d_weights = np.zeros_like(weights)
        d_weights[:, 1:] = d_input[:, 4, :, :].sum(axis=2)
        if self.arbitrage:
            d_weights[flipped, -1] = -d_weights[flipped, -1]
        d_raw = minmax_vjp_batch(cache, d_weights)
        self.actor.backward(d_raw)
        return objective, [g.copy() for g in self.actor.grads()]

    def update_actor(self, batch: list[Transition]) -> float:
        objective, grads = self.actor_objective_and_grads(batch)
        self._adam_actor.step(self.actor.params(), [-g for g in grads])
        return objective

    def soft_update_targets(self) -> None:
        soft_update(self.actor_target, self.actor, self.config.tau)
        soft_update(self.critic_target, self.critic, self.config.tau)


def greedy_policy(actor: Network, arbitrage: bool = True):
    """Noise-free policy closure for backtesting a trained actor."""

    def policy(state: EnvState) -> np.ndarray:
        raw = actor.forward(state.tensor.data[None])[0]
        weights = minmax_action(raw)
        if arbitrage:
            weights = enforce_arbitrage(weights)
        return weights

    return policy


def train(
    market: AlignedMarket,
    env_config: EnvConfig,
    train_config: TrainConfig,
    checkpoint_dir: str | Path | None = None,
    checkpoint_every: int | None = None,
) -> tuple[Network, Network, TrainLog]:
    """Episode loop: sampled windows, per-step replay insert and update pair.

    Fully deterministic for a given (market, configs, seed).
    """
    seeds = np.random.SeedSequence(train_config.seed).spawn(4)
    rng_init, rng_env, rng_noise, rng_sample = (np.random.default_rng(s) for s in seeds)

    actor = build_actor(market.n_assets, env_config.window, rng_init)
    critic = build_critic(market.n_assets, env_config.window, rng_init)
    agent = DDPG(actor, critic, train_config, arbitrage=env_config.arbitrage_enabled)

    env = TradingEnv(market, env_config)
    buffer = ReplayBuffer(train_config.buffer_capacity)
    log = TrainLog()

    step = 0
    episode = 0
    while step < train_config.total_steps:
        state = env.reset(rng_env)
        start_step = step
        rewards: list[float] = []
        costs: list[float] = []
        done = False
        while not done and step < train_config.total_steps:
            action = agent.act(state, rng_noise)
            transition = env.step(action)
            buffer.add(transition)
            rewards.append(transition.reward)
            costs.append(env.last_cost)
            if buffer.ready(train_config.batch_size):
                batch = buffer.sample(train_config.batch_size, rng_sample)
                agent.update_critic(batch)
                agent.update_actor(batch)
                agent.soft_update_targets()
            state = transition.next_state
            done = transition.done
            step += 1
        if done:
            log.records.append(EpisodeRecord(
                episode=episode,
                start_step=start_step,
                mean_daily_return=float(np.mean(rewards)),
                final_value=state.value,
                mean_cost=float(np.mean(costs)),
            ))
            episode += 1
            if (checkpoint_dir is not None and checkpoint_every
                    and episode % checkpoint_every == 0):
                save_checkpoint(
                    Path(checkpoint_dir) / f"checkpoint_ep{episode:05d}.json",
                    actor, critic,
                    {"assets": list(market.asset_ids), "window": env_config.window,
                     "episode": episode, "step": step},
                )
    return actor, critic, log

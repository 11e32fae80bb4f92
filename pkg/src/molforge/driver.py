"""Training, evaluation, and baseline rollout loops over a MoleculeEnv.

Everything here is deterministic given a seed: per-episode generators are
spawned from (seed, purpose, episode) so results do not depend on
scheduling or evaluation parallelism.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from molforge.actions import State
from molforge.env import MoleculeEnv
from molforge.molgraph import write_smiles
from molforge.qlearn import (
    AdamState,
    EpsilonSchedule,
    ReplayBuffer,
    ValueNetwork,
    head_mean_values,
    run_episode,
    select_action,
    sync_target,
    train_step,
)
from molforge.rewards import RewardSpec, raw_reward


@dataclass
class TrainSettings:
    """Learner hyperparameters; defaults follow the paper-faithful profile."""

    episodes: int = 5000
    hidden_dims: tuple[int, ...] = (1024, 512, 128, 32)
    heads: int = 10
    learning_rate: float = 1e-4
    batch_size: int = 128
    train_every: int = 1
    warmup_transitions: int = 500
    sync_every: int = 500
    replay_capacity: int = 100_000
    clip_norm: float = 10.0
    anneal_episodes: int | None = None
    final_epsilon: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def schedule(self) -> EpsilonSchedule:
        anneal = self.anneal_episodes
        if anneal is None:
            anneal = max(1, int(self.episodes * 0.75))
        return EpsilonSchedule(((0, 1.0), (anneal, self.final_epsilon)))


@dataclass
class EpisodeRow:
    """One training-log record."""

    episode: int
    epsilon: float
    head: int
    terminal_key: str
    raw_reward: float
    discounted_return: float
    loss_avg: float


@dataclass
class LedgerEntry:
    key: str
    best_reward: float
    first_seen: int
    last_seen: int


@dataclass
class TrainResult:
    net: ValueNetwork
    adam: AdamState
    rows: list[EpisodeRow]
    ledger: dict[str, LedgerEntry]

    def top_molecules(self, k: int = 3) -> list[LedgerEntry]:
        return sorted(
            self.ledger.values(), key=lambda e: (-e.best_reward, e.key)
        )[:k]

    def last_unique(self, k: int = 20) -> list[LedgerEntry]:
        return sorted(
            self.ledger.values(), key=lambda e: -e.last_seen
        )[:k]


def _episode_rng(seed: int, purpose: int, episode: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([seed, purpose, episode])
    )


def build_network(env, settings: TrainSettings, dtype=np.float32) -> ValueNetwork:
    dims = (env.feature_dim,) + tuple(settings.hidden_dims) + (settings.heads,)
    rng = np.random.default_rng(np.random.SeedSequence([settings.seed, 3]))
    return ValueNetwork.create(dims, rng, dtype=dtype)


def train(
    env: MoleculeEnv,
    settings: TrainSettings,
    net: ValueNetwork | None = None,
    adam: AdamState | None = None,
    origins: list | None = None,
    row_sink: Callable[[EpisodeRow], None] | None = None,
    episode_hook: Callable[[int, ValueNetwork, AdamState], None] | None = None,
) -> TrainResult:
    """Full training run: rollouts, replay, double-Q updates, run ledger.

    With ``origins`` given, each episode uniformly draws one origin
    molecule as both the reward reference and the initial state.
    """
    if net is None:
        net = build_network(env, settings)
    target = net.copy()
    if adam is None:
        adam = AdamState(
            net,
            lr=settings.learning_rate,
            beta1=settings.adam_beta1,
            beta2=settings.adam_beta2,
            eps=settings.adam_eps,
        )
    buffer = ReplayBuffer(settings.replay_capacity)
    schedule = settings.schedule()
    sample_rng = np.random.default_rng(
        np.random.SeedSequence([settings.seed, 11])
    )

    rows: list[EpisodeRow] = []
    ledger: dict[str, LedgerEntry] = {}
    env_steps = 0
    train_steps = 0
    loss_sum = 0.0
    loss_count = 0

    for episode in range(settings.episodes):
        rng = _episode_rng(settings.seed, 7, episode)
        if origins:
            origin = origins[int(rng.integers(len(origins)))]
            env.set_origin(origin)
        record = run_episode(env, net, schedule, episode, rng, buffer=buffer)

        for _step in record.states:
            env_steps += 1
            ready = len(buffer) >= max(
                settings.warmup_transitions, settings.batch_size
            )
            if ready and env_steps % settings.train_every == 0:
                loss = train_step(
                    env, net, target, buffer, settings.batch_size, adam,
                    sample_rng, settings.clip_norm,
                )
                loss_sum += loss
                loss_count += 1
                train_steps += 1
                if train_steps % settings.sync_every == 0:
                    sync_target(net, target)

        terminal = record.terminal_state
        key = write_smiles(terminal.molecule)
        raw = raw_reward(env.reward_spec, terminal.molecule)
        entry = ledger.get(key)
        if entry is None:
            ledger[key] = LedgerEntry(key, raw, episode, episode)
        else:
            entry.best_reward = max(entry.best_reward, raw)
            entry.last_seen = episode
        row = EpisodeRow(
            episode=episode,
            epsilon=record.epsilon,
            head=record.head,
            terminal_key=key,
            raw_reward=raw,
            discounted_return=record.discounted_return,
            loss_avg=loss_sum / loss_count if loss_count else 0.0,
        )
        rows.append(row)
        if row_sink is not None:
            row_sink(row)
        if episode_hook is not None:
            episode_hook(episode, net, adam)

    return TrainResult(net, adam, rows, ledger)


# ---------------------------------------------------------------------------
# Policies without learning
# ---------------------------------------------------------------------------


def rollout_policy(env: MoleculeEnv, chooser, rng: np.random.Generator):
    """Roll one episode with an arbitrary per-step index chooser."""
    state = env.initial()
    states, rewards = [], []
    for _t in range(env.max_steps):
        cands = env.candidates(state, need_features=False)
        idx = chooser(cands, rng)
        rewards.append(float(cands.rewards[idx]))
        state = cands.handles[idx]
        states.append(state)
    return states, rewards


def random_policy(cands, rng) -> int:
    return int(rng.integers(len(cands)))


def greedy_policy(cands, rng) -> int:
    return int(np.argmax(cands.rewards))


def eps_greedy_policy(epsilon: float):
    def choose(cands, rng):
        return select_action(cands.rewards, epsilon, rng)

    return choose


def baseline_episode(env, kind: str, seed: int, episode: int,
                     epsilon: float = 0.1):
    """One learning-free rollout: random, greedy, or eps-greedy."""
    rng = _episode_rng(seed, 13, episode)
    if kind == "random":
        chooser = random_policy
    elif kind == "greedy":
        chooser = greedy_policy
    elif kind == "eps-greedy":
        chooser = eps_greedy_policy(epsilon)
    else:
        raise ValueError(f"unknown baseline {kind!r}")
    return rollout_policy(env, chooser, rng)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvalRow:
    episode: int
    terminal_key: str
    raw_reward: float
    success: bool
    origin_key: str | None = None
    properties: dict = field(default_factory=dict)


def greedy_eval_episode(env, net, rng, epsilon: float = 0.0) -> State:
    """One rollout under the head-mean deterministic policy."""
    state = env.initial()
    for _t in range(env.max_steps):
        cands = env.candidates(state)
        values = head_mean_values(net, cands)
        idx = select_action(values, epsilon, rng)
        state = cands.handles[idx]
    return state


def max_eval_threads() -> int:
    value = os.environ.get("MOLFORGE_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def evaluate(
    env_factory: Callable[[], MoleculeEnv],
    net: ValueNetwork,
    episodes: int,
    epsilon: float,
    seed: int,
    success_fn: Callable[[MoleculeEnv, State], bool],
    origin_for_episode: Callable[[int], object] | None = None,
) -> list[EvalRow]:
    """Roll evaluation episodes against an immutable network snapshot.

    Episodes are independent and seeded individually, so results are
    identical for any MOLFORGE_THREADS level.
    """
    threads = min(max_eval_threads(), episodes) or 1

    def run_one(args):
        env, episode = args
        if origin_for_episode is not None:
            env.set_origin(origin_for_episode(episode))
        rng = _episode_rng(seed, 23, episode)
        terminal = greedy_eval_episode(env, net, rng, epsilon)
        key = write_smiles(terminal.molecule)
        raw = raw_reward(env.reward_spec, terminal.molecule)
        origin_key = None
        if origin_for_episode is not None:
            origin_key = write_smiles(env.initial().molecule)
        return EvalRow(
            episode=episode,
            terminal_key=key,
            raw_reward=raw,
            success=success_fn(env, terminal),
            origin_key=origin_key,
        )

    if threads <= 1:
        env = env_factory()
        return [run_one((env, ep)) for ep in range(episodes)]
    envs = [env_factory() for _ in range(threads)]
    jobs = [(envs[ep % threads], ep) for ep in range(episodes)]
    results: list[EvalRow | None] = [None] * episodes
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # chunk by env so no two threads share one environment
        def run_chunk(tid):
            out = []
            for env, ep in jobs:
                if env is envs[tid]:
                    out.append(run_one((env, ep)))
            return out

        for chunk in pool.map(run_chunk, range(threads)):
            for row in chunk:
                results[row.episode] = row
    return [r for r in results if r is not None]

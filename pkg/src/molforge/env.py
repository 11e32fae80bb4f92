"""Molecule MDP environment for the value learner.

Wraps action enumeration, reward evaluation, and featurization behind the
candidate-set protocol consumed by qlearn. Enumerations, fingerprints,
and raw rewards are memoized in digest-keyed LRU caches, which is what
makes replayed bootstrap targets affordable: revisited states cost a
lookup instead of a re-enumeration.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import replace

import numpy as np

from molforge.actions import (
    MdpConfig,
    State,
    _build_actions,
    molecule_digest,
    raw_enumerate,
)
from molforge.fingerprint import fingerprint_words
from molforge.molgraph import Molecule
from molforge.qlearn import CandidateSet
from molforge.rewards import (
    ConstrainedLogP,
    Maximize,
    MultiObjective,
    RewardSpec,
    TargetRange,
    raw_reward,
)


class _Lru:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.data: OrderedDict = OrderedDict()

    def get(self, key):
        try:
            self.data.move_to_end(key)
            return self.data[key]
        except KeyError:
            return None

    def put(self, key, value):
        self.data[key] = value
        self.data.move_to_end(key)
        while len(self.data) > self.capacity:
            self.data.popitem(last=False)


def _reward_token(spec: RewardSpec):
    v = spec.variant
    if isinstance(v, Maximize):
        return ("max", v.property)
    if isinstance(v, TargetRange):
        return ("range", v.property, v.lower, v.upper)
    if isinstance(v, ConstrainedLogP):
        return ("constrained", molecule_digest(v.origin), v.delta, v.penalty)
    if isinstance(v, MultiObjective):
        return ("multi", molecule_digest(v.origin), v.weight, v.property)
    raise TypeError(f"unknown reward variant {type(v).__name__}")


class MoleculeEnv:
    """Candidate-set provider over the molecule editing MDP."""

    def __init__(
        self,
        cfg: MdpConfig,
        reward_spec: RewardSpec,
        fp_radius: int = 3,
        fp_length: int = 2048,
        feature_dtype=np.float32,
        cache_entries: int = 8192,
    ):
        self.cfg = cfg
        self.reward_spec = reward_spec
        self.fp_radius = fp_radius
        self.fp_length = fp_length
        self.feature_dtype = np.dtype(feature_dtype)
        self.max_steps = cfg.max_steps
        self.feature_dim = fp_length + 1
        self._initial = cfg.initial_molecule
        self._token = _reward_token(reward_spec)
        self._enum = _Lru(cache_entries)
        self._fps = _Lru(cache_entries // 2)
        self._raws = _Lru(cache_entries)

    # -- configuration -----------------------------------------------------

    def set_reward_spec(self, spec: RewardSpec):
        self.reward_spec = spec
        self._token = _reward_token(spec)

    def set_origin(self, origin: Molecule):
        """Point origin-relative rewards at a new molecule and start there."""
        v = self.reward_spec.variant
        if isinstance(v, (ConstrainedLogP, MultiObjective)):
            self.set_reward_spec(
                replace(self.reward_spec, variant=replace(v, origin=origin))
            )
        self._initial = origin

    def set_initial(self, mol: Molecule):
        self._initial = mol

    # -- protocol ----------------------------------------------------------

    def initial(self) -> State:
        return State(self._initial, 0)

    def candidates(self, state: State, need_features: bool = True) -> CandidateSet:
        mol = state.molecule
        t_next = state.step + 1
        if t_next > self.cfg.max_steps:
            raise ValueError(f"state at step {state.step} is terminal")
        digest = molecule_digest(mol)

        entry = self._enum.get(digest)
        if entry is None:
            raw = raw_enumerate(mol, self.cfg)
            actions = tuple(
                _build_actions(
                    mol, self.cfg, raw,
                    include_no_mod=self.cfg.allow_no_modification,
                )
            )
            entry = (actions, tuple(a.successor for a in actions))
            self._enum.put(digest, entry)
        actions, succs = entry

        raws = self._raws.get((digest, self._token))
        if raws is None:
            spec = self.reward_spec
            raws = np.array(
                [raw_reward(spec, m) for m in succs], dtype=np.float64
            )
            self._raws.put((digest, self._token), raws)

        terminal = t_next >= self.cfg.max_steps
        spec = self.reward_spec
        if spec.per_step or terminal:
            discounted = raws * spec.gamma ** (self.cfg.max_steps - t_next)
        else:
            discounted = np.zeros_like(raws)

        features = None
        if need_features:
            words = self._fps.get(digest)
            if words is None:
                rows = [
                    fingerprint_words(m, self.fp_radius, self.fp_length)
                    for m in succs
                ]
                words = np.stack(rows) if rows else np.zeros(
                    (0, self.fp_length // 64), dtype=np.uint64
                )
                self._fps.put(digest, words)
                for m in succs:
                    m.__dict__.pop("_packed", None)
            bits = np.unpackbits(
                words.view(np.uint8), axis=1, bitorder="little"
            )
            features = np.empty(
                (len(succs), self.feature_dim), dtype=self.feature_dtype
            )
            features[:, : self.fp_length] = bits
            features[:, self.fp_length] = (
                self.cfg.max_steps - t_next
            ) / self.cfg.max_steps

        handles = tuple(State(m, t_next) for m in succs)
        return CandidateSet(
            rewards=discounted,
            features=features,
            terminal=terminal,
            handles=handles,
            actions=actions,
        )

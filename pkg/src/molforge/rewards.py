"""Reward functions over MDP states.

Variants: plain property maximization, target-range rewards, similarity-
constrained logP, and scalarized multi-objective (similarity vs property).
Rewards are emitted per step and discounted by gamma^(T - t) so terminal
states weigh most; the discounted value is what training consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from molforge.actions import State
from molforge.fingerprint import (
    SIMILARITY_RADIUS,
    fingerprint_words,
    tanimoto_words,
)
from molforge.molgraph import Molecule
from molforge.properties import LogPTable, evaluate, logp

SIMILARITY_LENGTH = 2048


@dataclass(frozen=True)
class Maximize:
    """Reward = the property value itself."""

    property: str


@dataclass(frozen=True)
class TargetRange:
    """Reward 1 inside [lower, upper], else negative distance to the range."""

    property: str
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} > upper {self.upper}")


@dataclass(frozen=True)
class ConstrainedLogP:
    """logP, penalized when similarity to the origin drops below delta."""

    origin: Molecule
    delta: float
    penalty: float = 100.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")
        if self.penalty < 0:
            raise ValueError(f"penalty must be >= 0, got {self.penalty}")


@dataclass(frozen=True)
class MultiObjective:
    """Scalarized two-objective reward: weight on similarity, rest on
    the property."""

    origin: Molecule
    weight: float
    property: str

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight must be in [0, 1], got {self.weight}")


Variant = Maximize | TargetRange | ConstrainedLogP | MultiObjective


@dataclass(frozen=True)
class RewardSpec:
    variant: Variant
    gamma: float = 0.9
    per_step: bool = True

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")


@dataclass(frozen=True)
class RewardVector:
    """Per-objective rewards of one state, before scalarization."""

    components: np.ndarray


def similarity_words(mol: Molecule) -> np.ndarray:
    """Radius-2 fingerprint words for similarity rewards, cached."""
    key = "_sim_words"
    words = mol.__dict__.get(key)
    if words is None:
        words = fingerprint_words(mol, SIMILARITY_RADIUS, SIMILARITY_LENGTH)
        mol.__dict__[key] = words
    return words


def similarity(mol: Molecule, origin: Molecule) -> float:
    """Tanimoto similarity on radius-2 fingerprints."""
    return tanimoto_words(similarity_words(mol), similarity_words(origin))


def target_range_reward(p: float, lower: float, upper: float) -> float:
    """1 inside the closed range, else the negative distance to it."""
    if lower > upper:
        raise ValueError(f"lower {lower} > upper {upper}")
    if lower <= p <= upper:
        return 1.0
    return -min(abs(p - lower), abs(p - upper))


def constrained_reward(
    mol: Molecule, spec: ConstrainedLogP, table: LogPTable | None = None
) -> float:
    """logP minus penalty * (delta - similarity) when below the threshold."""
    sim = similarity(mol, spec.origin)
    value = logp(mol, table)
    if sim < spec.delta:
        value -= spec.penalty * (spec.delta - sim)
    return value


def scalarize(w: float, sim: float, prop: float) -> float:
    """w * sim + (1 - w) * prop."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight must be in [0, 1], got {w}")
    return w * sim + (1.0 - w) * prop


def scalarize_vector(weights, values) -> float:
    """General weight-vector dot product over k objectives."""
    weights = np.asarray(weights, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if weights.shape != values.shape:
        raise ValueError(f"shape mismatch: {weights.shape} vs {values.shape}")
    return float(weights @ values)


def reward_vector(spec: RewardSpec, mol: Molecule) -> RewardVector:
    """The per-objective components before scalarization."""
    v = spec.variant
    if isinstance(v, MultiObjective):
        comps = [similarity(mol, v.origin), evaluate(v.property, mol)]
    else:
        comps = [raw_reward(spec, mol)]
    return RewardVector(np.array(comps, dtype=np.float64))


def raw_reward(spec: RewardSpec, mol: Molecule) -> float:
    """Undiscounted reward of a molecule under the active variant."""
    v = spec.variant
    if isinstance(v, Maximize):
        return evaluate(v.property, mol)
    if isinstance(v, TargetRange):
        return target_range_reward(evaluate(v.property, mol), v.lower, v.upper)
    if isinstance(v, ConstrainedLogP):
        return constrained_reward(mol, v)
    if isinstance(v, MultiObjective):
        return scalarize(
            v.weight, similarity(mol, v.origin), evaluate(v.property, mol)
        )
    raise TypeError(f"unknown reward variant {type(v).__name__}")


def step_reward(spec: RewardSpec, state: State, max_steps: int) -> float:
    """Discounted per-step reward gamma^(T - t) * raw(m).

    With per_step disabled the reward is zero everywhere except t = T,
    reproducing the final-reward-only ablation.
    """
    if not spec.per_step and state.step < max_steps:
        return 0.0
    return spec.gamma ** (max_steps - state.step) * raw_reward(
        spec, state.molecule
    )


def relative_improvement(mol: Molecule, origin: Molecule, prop: str) -> float:
    """(p(m) - p(m0)) / (1 - p(m0)) for properties bounded above by 1."""
    base = evaluate(prop, origin)
    if base == 1.0:
        raise ZeroDivisionError(
            "relative improvement undefined when the origin already attains 1"
        )
    return (evaluate(prop, mol) - base) / (1.0 - base)

"""Circular-substructure bit fingerprints, Tanimoto similarity, and state
featurization for the value network.

Fingerprints hash iterated atom neighborhoods into a fixed-length bit
vector with a fixed seedless 64-bit hash, so they are deterministic
across runs and identical for isomorphic molecules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from molforge import _kernels
from molforge.actions import MdpConfig, State, _maxval_by_code, packed_graph
from molforge.molgraph import Molecule

DEFAULT_RADIUS = 3
DEFAULT_LENGTH = 2048
SIMILARITY_RADIUS = 2


class LengthMismatch(Exception):
    pass


@dataclass(frozen=True)
class BitFingerprint:
    """Fixed-length hashed substructure bit vector."""

    bits: int
    length: int
    radius: int

    def __post_init__(self):
        if self.length <= 0 or self.length & (self.length - 1):
            raise ValueError(f"length must be a power of two, got {self.length}")

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def to_hex(self) -> str:
        return format(self.bits, f"0{self.length // 4}x")

    def as_array(self) -> np.ndarray:
        """0/1 float vector of the bits, lowest bit first."""
        words = np.frombuffer(
            self.bits.to_bytes(self.length // 8, "little"), dtype=np.uint8
        )
        return np.unpackbits(words, bitorder="little").astype(np.float64)


@dataclass(frozen=True)
class StateFeatures:
    """Fingerprint bits as 0/1 plus normalized steps remaining."""

    vector: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.vector[-1] <= 1.0:
            raise ValueError("steps-remaining feature outside [0, 1]")


def fingerprint_words(mol: Molecule, radius: int, length: int) -> np.ndarray:
    """Fingerprint as a uint64 word array (length // 64 words)."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if length < 64 or length & (length - 1):
        raise ValueError(f"length must be a power of two >= 64, got {length}")
    el, ba, bb, bo = packed_graph(mol)
    words = np.zeros(length // 64, dtype=np.uint64)
    _kernels.fingerprint_graph(
        len(mol.elements), el, _maxval_by_code(mol.table), ba, bb, bo,
        radius, words,
    )
    return words


def words_to_int(words: np.ndarray) -> int:
    return int.from_bytes(words.tobytes(), "little")


def morgan_fingerprint(
    mol: Molecule,
    radius: int = DEFAULT_RADIUS,
    length: int = DEFAULT_LENGTH,
) -> BitFingerprint:
    """Hash iterated atom neighborhoods out to ``radius`` into ``length`` bits.

    Iteration 0 covers (element, heavy degree, summed bond orders,
    implicit-H count, in-ring flag) per atom; each further iteration
    rehashes with the sorted (bond order, neighbor invariant) pairs.
    """
    return BitFingerprint(
        bits=words_to_int(fingerprint_words(mol, radius, length)),
        length=length,
        radius=radius,
    )


def tanimoto(a: BitFingerprint, b: BitFingerprint) -> float:
    """|A ∩ B| / |A ∪ B| over set bits; 1.0 when both are empty."""
    if a.length != b.length:
        raise LengthMismatch(f"lengths differ: {a.length} != {b.length}")
    na = a.bits.bit_count()
    nb = b.bits.bit_count()
    nc = (a.bits & b.bits).bit_count()
    if na == 0 and nb == 0:
        return 1.0
    return nc / (na + nb - nc)


def tanimoto_words(a: np.ndarray, b: np.ndarray) -> float:
    """Tanimoto over uint64 word arrays (hot-path twin of tanimoto)."""
    if a.shape != b.shape:
        raise LengthMismatch(f"word counts differ: {a.shape} != {b.shape}")
    na = int(np.bitwise_count(a).sum())
    nb = int(np.bitwise_count(b).sum())
    nc = int(np.bitwise_count(a & b).sum())
    if na == 0 and nb == 0:
        return 1.0
    return nc / (na + nb - nc)


def steps_remaining_feature(step: int, max_steps: int) -> float:
    return (max_steps - step) / max_steps


def featurize(
    state: State,
    cfg: MdpConfig,
    radius: int = DEFAULT_RADIUS,
    length: int = DEFAULT_LENGTH,
) -> StateFeatures:
    """Fingerprint bits concatenated with (T - t) / T; dimension length + 1."""
    words = fingerprint_words(state.molecule, radius, length)
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")
    vec = np.empty(length + 1, dtype=np.float64)
    vec[:length] = bits
    vec[length] = steps_remaining_feature(state.step, cfg.max_steps)
    return StateFeatures(vec)

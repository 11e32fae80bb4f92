"""Legal edit enumeration and deterministic transitions for the molecule MDP.

Three edit families (atom addition, bond addition, bond removal) plus
"no modification". Enumerated actions are deduplicated at the level of
isomorphic successors and returned in a deterministic, index-independent
order, so isomorphic states always expose identical action lists.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from molforge import _kernels
from molforge.molgraph import (
    DEFAULT_ELEMENTS,
    ORGANIC_SYMBOLS,
    ElementTable,
    Molecule,
    new_empty,
)

ELEMENT_CODES = {sym: i for i, sym in enumerate(ORGANIC_SYMBOLS)}


class ActionError(Exception):
    pass


class TerminalState(ActionError):
    pass


class ForeignAction(ActionError):
    """Action applied to a state it was not generated for."""


def _default_initial() -> Molecule:
    return new_empty()


@dataclass(frozen=True)
class MdpConfig:
    """Environment parameters: element alphabet, horizon, and edit rules."""

    elements: tuple[str, ...] = ("C", "N", "O")
    max_steps: int = 40
    allowed_ring_sizes: frozenset[int] = frozenset({3, 4, 5, 6})
    allow_bond_removal: bool = True
    allow_no_modification: bool = True
    initial_molecule: Molecule = field(default_factory=_default_initial)
    table: ElementTable = DEFAULT_ELEMENTS

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if not self.elements:
            raise ValueError("element alphabet must be non-empty")
        for sym in self.elements:
            if sym not in ELEMENT_CODES:
                raise ValueError(f"unsupported element {sym!r}")
        bad = set(self.allowed_ring_sizes) - set(range(3, 9))
        if bad:
            raise ValueError(f"allowed_ring_sizes outside 3..8: {sorted(bad)}")
        object.__setattr__(
            self, "allowed_ring_sizes", frozenset(self.allowed_ring_sizes)
        )
        object.__setattr__(self, "elements", tuple(self.elements))


@dataclass(frozen=True)
class State:
    """MDP state: a molecule plus the number of steps taken."""

    molecule: Molecule
    step: int

    def is_terminal(self, cfg: MdpConfig) -> bool:
        return self.step >= cfg.max_steps


@dataclass(frozen=True)
class AtomAddition:
    """Attach a new atom to the anchor (None when starting from empty)."""

    element: str
    anchor: int | None
    order: int


@dataclass(frozen=True)
class BondChange:
    """Replace the (a, b) bond order; 0 on either side means no bond."""

    a: int
    b: int
    old_order: int
    new_order: int


@dataclass(frozen=True)
class NoModification:
    pass


@dataclass(frozen=True)
class Action:
    kind: AtomAddition | BondChange | NoModification
    successor: Molecule
    source_digest: int = field(repr=False, default=0)


# ---------------------------------------------------------------------------
# Packing and kernel plumbing
# ---------------------------------------------------------------------------


def _maxval_by_code(table: ElementTable) -> np.ndarray:
    return np.array(
        [table.max_valence(sym) for sym in ORGANIC_SYMBOLS], dtype=np.int64
    )


def packed_graph(mol: Molecule):
    """(elem codes, bond a, bond b, bond order) int64 arrays, cached."""
    packed = mol.__dict__.get("_packed")
    if packed is None:
        el = np.array([ELEMENT_CODES[s] for s in mol.elements], dtype=np.int64)
        ba = np.array([a for a, _, _ in mol.bonds], dtype=np.int64)
        bb = np.array([b for _, b, _ in mol.bonds], dtype=np.int64)
        bo = np.array([o for _, _, o in mol.bonds], dtype=np.int64)
        packed = (el, ba, bb, bo)
        mol.__dict__["_packed"] = packed
    return packed


def molecule_digest(mol: Molecule) -> int:
    """Isomorphism-invariant 64-bit digest, cached on the molecule."""
    digest = mol.__dict__.get("_digest")
    if digest is None:
        el, ba, bb, bo = packed_graph(mol)
        digest = int(
            _kernels.graph_digest(
                len(mol.elements), el, _maxval_by_code(mol.table), ba, bb, bo
            )
        )
        mol.__dict__["_digest"] = digest
    return digest


def _molecule_from_slabs(out_elems, out_bonds, sn, sm, i, table, digest):
    codes = out_elems[i, :sn].tolist()
    flat = out_bonds[i, : 3 * sm].tolist()
    it = iter(flat)
    bonds = sorted(zip(it, it, it))
    mol = Molecule.__new__(Molecule)
    mol.elements = tuple(ORGANIC_SYMBOLS[c] for c in codes)
    mol.bonds = tuple(bonds)
    mol.table = table
    mol.__dict__["_digest"] = digest
    return mol


class RawEnumeration:
    """Kernel output for one molecule: parallel arrays over unique edits."""

    __slots__ = ("count", "kinds", "p1", "p2", "o1", "o2", "digests",
                 "out_n", "out_m", "out_elems", "out_bonds")

    def __init__(self, count, kinds, p1, p2, o1, o2, digests,
                 out_n, out_m, out_elems, out_bonds):
        self.count = count
        self.kinds = kinds
        self.p1 = p1
        self.p2 = p2
        self.o1 = o1
        self.o2 = o2
        self.digests = digests
        self.out_n = out_n
        self.out_m = out_m
        self.out_elems = out_elems
        self.out_bonds = out_bonds


def raw_enumerate(mol: Molecule, cfg: MdpConfig) -> RawEnumeration:
    """Run the enumeration kernel, growing output buffers on overflow."""
    el, ba, bb, bo = packed_graph(mol)
    n = len(mol.elements)
    m = len(mol.bonds)
    add_codes = np.array(
        sorted(ELEMENT_CODES[s] for s in cfg.elements), dtype=np.int64
    )
    ring_mask = 0
    for size in cfg.allowed_ring_sizes:
        ring_mask |= 1 << size
    maxval = _maxval_by_code(cfg.table)

    capacity = 256
    hard_cap = 3 * len(add_codes) * (n + 1) + 3 * n * n + 3 * m + 8
    while True:
        kinds = np.empty(capacity, dtype=np.int64)
        p1 = np.empty(capacity, dtype=np.int64)
        p2 = np.empty(capacity, dtype=np.int64)
        o1 = np.empty(capacity, dtype=np.int64)
        o2 = np.empty(capacity, dtype=np.int64)
        digests = np.empty(capacity, dtype=np.uint64)
        out_n = np.empty(capacity, dtype=np.int64)
        out_m = np.empty(capacity, dtype=np.int64)
        out_elems = np.empty((capacity, n + 1), dtype=np.int64)
        out_bonds = np.empty((capacity, 3 * (m + 1)), dtype=np.int64)
        count = _kernels.enumerate_unique(
            n, el, maxval, ba, bb, bo, add_codes, ring_mask,
            cfg.allow_bond_removal,
            kinds, p1, p2, o1, o2, digests, out_n, out_m, out_elems,
            out_bonds,
        )
        if count >= 0:
            return RawEnumeration(
                count, kinds, p1, p2, o1, o2, digests, out_n, out_m,
                out_elems, out_bonds,
            )
        if capacity > hard_cap:
            raise RuntimeError("enumeration buffer overflow past hard cap")
        capacity *= 4


def _build_actions(mol: Molecule, cfg: MdpConfig, raw: RawEnumeration,
                   include_no_mod: bool) -> list[Action]:
    source = molecule_digest(mol)
    entries = []
    for i in range(raw.count):
        digest = int(raw.digests[i])
        succ = _molecule_from_slabs(
            raw.out_elems, raw.out_bonds, int(raw.out_n[i]), int(raw.out_m[i]),
            i, cfg.table, digest,
        )
        if raw.kinds[i] == _kernels.KIND_ATOM_ADD:
            anchor = int(raw.p1[i])
            kind = AtomAddition(
                element=ORGANIC_SYMBOLS[int(raw.p2[i])],
                anchor=None if anchor < 0 else anchor,
                order=int(raw.o2[i]),
            )
        else:
            kind = BondChange(
                a=int(raw.p1[i]), b=int(raw.p2[i]),
                old_order=int(raw.o1[i]), new_order=int(raw.o2[i]),
            )
        entries.append((digest, Action(kind, succ, source)))
    if include_no_mod:
        entries.append((source, Action(NoModification(), mol, source)))
    entries.sort(key=lambda pair: pair[0])
    return [action for _, action in entries]


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def enumerate_atom_additions(mol: Molecule, cfg: MdpConfig) -> list[Action]:
    """Implicit-hydrogen replacements: one action per distinct successor."""
    raw = raw_enumerate(mol, cfg)
    actions = _build_actions(mol, cfg, raw, include_no_mod=False)
    return [a for a in actions if isinstance(a.kind, AtomAddition)]


def enumerate_bond_additions(mol: Molecule, cfg: MdpConfig) -> list[Action]:
    """New bonds and order raises, subject to the ring heuristics."""
    raw = raw_enumerate(mol, cfg)
    actions = _build_actions(mol, cfg, raw, include_no_mod=False)
    return [
        a for a in actions
        if isinstance(a.kind, BondChange) and a.kind.new_order > a.kind.old_order
    ]


def enumerate_bond_removals(mol: Molecule, cfg: MdpConfig) -> list[Action]:
    """Order drops and full removals with disconnected-atom cleanup."""
    if not cfg.allow_bond_removal:
        cfg = replace(cfg, allow_bond_removal=True)
    raw = raw_enumerate(mol, cfg)
    actions = _build_actions(mol, cfg, raw, include_no_mod=False)
    return [
        a for a in actions
        if isinstance(a.kind, BondChange) and a.kind.new_order < a.kind.old_order
    ]


def valid_actions(state: State, cfg: MdpConfig) -> list[Action]:
    """The full deduplicated action set of a non-terminal state.

    Union of the edit families (removals only when allowed) plus
    NoModification when enabled; ordered by the successor digest so the
    listing is deterministic and identical across isomorphic states.
    """
    if state.is_terminal(cfg):
        raise TerminalState(f"state at step {state.step} is terminal")
    raw = raw_enumerate(state.molecule, cfg)
    return _build_actions(
        state.molecule, cfg, raw, include_no_mod=cfg.allow_no_modification
    )


def apply(state: State, action: Action, cfg: MdpConfig) -> State:
    """Deterministic transition to (successor, step + 1)."""
    if state.is_terminal(cfg):
        raise TerminalState(f"state at step {state.step} is terminal")
    if action.source_digest != molecule_digest(state.molecule):
        raise ForeignAction("action was generated for a different molecule")
    return State(action.successor, state.step + 1)

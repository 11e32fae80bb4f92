"""Molecular graphs as immutable values: atoms, bonds, valence accounting,
ring analysis, canonical identity, and a restricted SMILES reader/writer.

Molecules are undirected labeled multigraph-free graphs: at most one bond
record per atom pair, bond orders 1..3, implicit hydrogens fill unused
valence. All edit operations return new values.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping


class MolGraphError(Exception):
    """Base class for molecular graph errors."""


class ValenceViolation(MolGraphError):
    pass


class SelfBond(MolGraphError):
    pass


class IndexOutOfRange(MolGraphError):
    pass


class DisconnectedMolecule(MolGraphError):
    """An edit would split the molecule into multi-atom fragments."""


class ParseError(MolGraphError):
    """SMILES rejection with the offending position."""

    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"position {position}: {message}")


@dataclass(frozen=True)
class Element:
    """One entry of the element alphabet."""

    symbol: str
    max_valence: int
    atomic_weight: float

    def __post_init__(self):
        if self.max_valence < 1:
            raise ValueError(f"max_valence must be >= 1, got {self.max_valence}")
        if self.atomic_weight <= 0:
            raise ValueError(f"atomic_weight must be > 0, got {self.atomic_weight}")


# Standard IUPAC 2021 atomic weights, daltons.
ATOMIC_WEIGHTS = {
    "H": 1.008,
    "C": 12.011,
    "N": 14.007,
    "O": 15.999,
    "F": 18.998,
    "P": 30.974,
    "S": 32.06,
    "Cl": 35.45,
    "Br": 79.904,
    "I": 126.904,
}

DEFAULT_MAX_VALENCE = {
    "H": 1,
    "C": 4,
    "N": 3,
    "O": 2,
    "F": 1,
    "P": 3,
    "S": 2,
    "Cl": 1,
    "Br": 1,
    "I": 1,
}

ORGANIC_SYMBOLS = ("C", "N", "O", "F", "P", "S", "Cl", "Br", "I")


class ElementTable:
    """Element alphabet with per-element maximum valence, overridable.

    The default table covers {H, C, N, O, F, P, S, Cl, Br, I} with the
    common single-valence model (multivalent S/P handled by override).
    """

    def __init__(self, max_valence: Mapping[str, int] | None = None):
        valences = dict(DEFAULT_MAX_VALENCE)
        if max_valence:
            for sym, val in max_valence.items():
                if sym not in ATOMIC_WEIGHTS:
                    raise KeyError(f"unknown element symbol {sym!r}")
                valences[sym] = val
        self._elements = {
            sym: Element(sym, valences[sym], ATOMIC_WEIGHTS[sym])
            for sym in ATOMIC_WEIGHTS
        }

    def __getitem__(self, symbol: str) -> Element:
        try:
            return self._elements[symbol]
        except KeyError:
            raise KeyError(f"unknown element symbol {symbol!r}") from None

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._elements

    def max_valence(self, symbol: str) -> int:
        return self[symbol].max_valence


DEFAULT_ELEMENTS = ElementTable()


class Molecule:
    """Immutable molecular graph value.

    ``elements`` is a tuple of element symbols indexed by atom, ``bonds``
    a sorted tuple of ``(a, b, order)`` with ``a < b``. Equality and hash
    are structural (index-sensitive); use :func:`canonical_key` for
    isomorphism-level identity.
    """

    __slots__ = ("elements", "bonds", "table", "__dict__", "__weakref__")

    def __init__(
        self,
        elements: Iterable[str] = (),
        bonds: Iterable[tuple[int, int, int]] = (),
        table: ElementTable = DEFAULT_ELEMENTS,
    ):
        self.elements: tuple[str, ...] = tuple(elements)
        norm = []
        for a, b, order in bonds:
            if a > b:
                a, b = b, a
            norm.append((a, b, order))
        norm.sort()
        self.bonds: tuple[tuple[int, int, int], ...] = tuple(norm)
        self.table = table
        if __debug__:
            self._validate()

    # -- structure ---------------------------------------------------------

    @property
    def atom_count(self) -> int:
        return len(self.elements)

    @property
    def atoms(self) -> tuple[Element, ...]:
        return tuple(self.table[sym] for sym in self.elements)

    @cached_property
    def bond_orders(self) -> dict[tuple[int, int], int]:
        return {(a, b): o for a, b, o in self.bonds}

    def bond_order(self, a: int, b: int) -> int:
        """Order of the bond between two atoms, 0 if absent."""
        if a > b:
            a, b = b, a
        return self.bond_orders.get((a, b), 0)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per-atom tuple of (neighbor, order) pairs, neighbor-sorted."""
        nbrs: list[list[tuple[int, int]]] = [[] for _ in self.elements]
        for a, b, o in self.bonds:
            nbrs[a].append((b, o))
            nbrs[b].append((a, o))
        return tuple(tuple(sorted(n)) for n in nbrs)

    def degree(self, atom: int) -> int:
        return len(self.adjacency[atom])

    def valence_used(self, atom: int) -> int:
        return sum(o for _, o in self.adjacency[atom])

    def _check_index(self, atom: int):
        if not 0 <= atom < len(self.elements):
            raise IndexOutOfRange(
                f"atom index {atom} out of range for {len(self.elements)} atoms"
            )

    def _validate(self):
        n = len(self.elements)
        seen = set()
        for a, b, o in self.bonds:
            if a == b:
                raise SelfBond(f"self-bond on atom {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise IndexOutOfRange(f"bond ({a},{b}) outside 0..{n - 1}")
            if not 1 <= o <= 3:
                raise ValueError(f"bond order {o} outside 1..3")
            if (a, b) in seen:
                raise ValueError(f"duplicate bond record for ({a},{b})")
            seen.add((a, b))
        for i, sym in enumerate(self.elements):
            cap = self.table[sym].max_valence
            used = self.valence_used(i)
            if used > cap:
                raise ValenceViolation(
                    f"atom {i} ({sym}) uses valence {used} > {cap}"
                )
        if n and len(self.component_sizes()) != 1:
            raise DisconnectedMolecule(
                f"molecule has {len(self.component_sizes())} components"
            )

    def component_sizes(self) -> list[int]:
        """Connected-component sizes (unvalidated graphs allowed)."""
        n = len(self.elements)
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for a, b, _ in self.bonds:
            nbrs[a].append(b)
            nbrs[b].append(a)
        seen = [False] * n
        sizes = []
        for start in range(n):
            if seen[start]:
                continue
            size = 0
            queue = deque([start])
            seen[start] = True
            while queue:
                u = queue.popleft()
                size += 1
                for v in nbrs[u]:
                    if not seen[v]:
                        seen[v] = True
                        queue.append(v)
            sizes.append(size)
        return sizes

    def implicit_hydrogens(self, atom: int) -> int:
        return free_valence(self, atom)

    def total_implicit_hydrogens(self) -> int:
        return sum(free_valence(self, i) for i in range(len(self.elements)))

    # -- value semantics ---------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Molecule):
            return NotImplemented
        return self.elements == other.elements and self.bonds == other.bonds

    def __hash__(self) -> int:
        return hash((self.elements, self.bonds))

    def __repr__(self) -> str:
        return f"Molecule({write_smiles(self)!r})"


@dataclass(frozen=True)
class RingInfo:
    """Ring membership flags plus the SSSR ring-size multiset."""

    atom_in_ring: tuple[bool, ...]
    bond_in_ring: dict[tuple[int, int], bool]
    ring_sizes: tuple[int, ...]


@dataclass(frozen=True)
class CanonicalKey:
    """Deterministic isomorphism-invariant string identity."""

    text: str

    def __str__(self) -> str:
        return self.text


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def new_empty(table: ElementTable = DEFAULT_ELEMENTS) -> Molecule:
    """Molecule with zero atoms and zero bonds."""
    return Molecule((), (), table)


def free_valence(mol: Molecule, atom: int) -> int:
    """Unused valence of an atom; equals its implicit hydrogen count."""
    mol._check_index(atom)
    return mol.table[mol.elements[atom]].max_valence - mol.valence_used(atom)


def set_bond(mol: Molecule, a: int, b: int, order: int) -> Molecule:
    """Return a copy with the (a, b) bond order replaced; 0 deletes the bond.

    Raises ValenceViolation/SelfBond/IndexOutOfRange on illegal edits and
    DisconnectedMolecule if deleting the bond would fragment the graph.
    """
    mol._check_index(a)
    mol._check_index(b)
    if a == b:
        raise SelfBond(f"cannot bond atom {a} to itself")
    if not 0 <= order <= 3:
        raise ValueError(f"bond order {order} outside 0..3")
    if a > b:
        a, b = b, a
    old = mol.bond_order(a, b)
    if order == old:
        return mol
    for atom in (a, b):
        cap = mol.table[mol.elements[atom]].max_valence
        if mol.valence_used(atom) - old + order > cap:
            raise ValenceViolation(
                f"atom {atom} ({mol.elements[atom]}) would exceed valence {cap}"
            )
    bonds = [(x, y, o) for x, y, o in mol.bonds if (x, y) != (a, b)]
    if order > 0:
        bonds.append((a, b, order))
    try:
        return Molecule(mol.elements, bonds, mol.table)
    except DisconnectedMolecule:
        raise DisconnectedMolecule(
            f"removing bond ({a},{b}) disconnects the molecule"
        ) from None


def shortest_path_length(mol: Molecule, a: int, b: int) -> int | None:
    """Bond count of the shortest a-b path, None if unreachable."""
    mol._check_index(a)
    mol._check_index(b)
    if a == b:
        return 0
    dist = {a: 0}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        for v, _ in mol.adjacency[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                if v == b:
                    return dist[v]
                queue.append(v)
    return None


def _bridges(mol: Molecule) -> set[tuple[int, int]]:
    """Bonds not on any cycle, via iterative lowlink DFS."""
    n = len(mol.elements)
    disc = [-1] * n
    low = [0] * n
    bridges: set[tuple[int, int]] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        stack: list[tuple[int, int, int]] = [(root, -1, 0)]
        while stack:
            u, parent, idx = stack.pop()
            if idx == 0:
                disc[u] = low[u] = timer
                timer += 1
            nbrs = mol.adjacency[u]
            if idx < len(nbrs):
                stack.append((u, parent, idx + 1))
                v = nbrs[idx][0]
                if v == parent:
                    continue
                if disc[v] != -1:
                    low[u] = min(low[u], disc[v])
                else:
                    stack.append((v, u, 0))
            else:
                if parent != -1:
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.add((min(u, parent), max(u, parent)))
    return bridges


def _min_cycle_basis_sizes(mol: Molecule) -> tuple[int, ...]:
    """Sizes of a minimum cycle basis (Horton candidates + GF(2) elimination)."""
    n = len(mol.elements)
    m = len(mol.bonds)
    if n == 0:
        return ()
    nu = m - n + len(mol.component_sizes())
    if nu <= 0:
        return ()
    edge_index = {(a, b): i for i, (a, b, _) in enumerate(mol.bonds)}

    def edge_bit(u: int, v: int) -> int:
        return 1 << edge_index[(u, v) if u < v else (v, u)]

    # All-pairs BFS trees with parent pointers for path reconstruction.
    parents = []
    for root in range(n):
        par = [-2] * n
        par[root] = -1
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, _ in mol.adjacency[u]:
                if par[v] == -2:
                    par[v] = u
                    queue.append(v)
        parents.append(par)

    def path_mask(root: int, node: int) -> tuple[int, int] | None:
        par = parents[root]
        if par[node] == -2:
            return None
        mask = 0
        length = 0
        while node != root:
            p = par[node]
            mask |= edge_bit(node, p)
            node = p
            length += 1
        return mask, length

    candidates: list[tuple[int, int]] = []
    seen_masks: set[int] = set()
    for root in range(n):
        for a, b, _ in mol.bonds:
            pa = path_mask(root, a)
            pb = path_mask(root, b)
            if pa is None or pb is None:
                continue
            mask = pa[0] ^ pb[0] ^ edge_bit(a, b)
            length = pa[1] + pb[1] + 1
            # Paths must be disjoint for a simple cycle: edge-count check.
            if mask.bit_count() != length:
                continue
            if mask not in seen_masks:
                seen_masks.add(mask)
                candidates.append((length, mask))
    candidates.sort()

    # Greedy GF(2) elimination over shortest candidates first; each kept
    # row is identified by its lowest set bit.
    pivots: dict[int, int] = {}
    sizes: list[int] = []
    for length, mask in candidates:
        residue = mask
        while residue:
            row = pivots.get(residue & -residue)
            if row is None:
                break
            residue ^= row
        if residue:
            pivots[residue & -residue] = residue
            sizes.append(length)
            if len(sizes) == nu:
                break
    return tuple(sorted(sizes))


def ring_info(mol: Molecule) -> RingInfo:
    """Ring membership per atom/bond plus the SSSR ring-size multiset."""
    cached = mol.__dict__.get("_ring_info")
    if cached is not None:
        return cached
    bridges = _bridges(mol)
    bond_in_ring = {
        (a, b): (a, b) not in bridges for a, b, _ in mol.bonds
    }
    atom_in_ring = [False] * len(mol.elements)
    for (a, b), in_ring in bond_in_ring.items():
        if in_ring:
            atom_in_ring[a] = True
            atom_in_ring[b] = True
    info = RingInfo(tuple(atom_in_ring), bond_in_ring, _min_cycle_basis_sizes(mol))
    mol.__dict__["_ring_info"] = info
    return info


# ---------------------------------------------------------------------------
# SMILES reader
# ---------------------------------------------------------------------------

_AROMATIC_CHARS = set("bcnops")
_TWO_LETTER = ("Cl", "Br")
_BOND_CHARS = {"-": 1, "=": 2, "#": 3}


def parse_smiles(text: str, table: ElementTable = DEFAULT_ELEMENTS) -> Molecule:
    """Parse the restricted Kekulé SMILES subset into a Molecule.

    Supported grammar: organic-subset atoms C N O F P S Cl Br I, bond
    symbols ``- = #``, parenthesized branches, ring closures ``1``-``9``
    and ``%nn``. Everything else (aromatics, brackets, charges, isotopes,
    stereo markers, dots) raises ParseError with the position.
    """
    elements: list[str] = []
    bonds: dict[tuple[int, int], int] = {}
    used: list[int] = []  # valence consumed per atom
    caps: list[int] = []
    stack: list[int] = []
    prev = -1
    pending: int | None = None
    pending_pos = 0
    open_rings: dict[int, tuple[int, int | None, int]] = {}

    def add_bond(a: int, b: int, order: int, pos: int):
        if a == b:
            raise ParseError(pos, "ring closure bonds an atom to itself")
        key = (min(a, b), max(a, b))
        if key in bonds:
            raise ParseError(pos, f"duplicate bond between atoms {a} and {b}")
        for atom in (a, b):
            if used[atom] + order > caps[atom]:
                raise ParseError(
                    pos,
                    f"valence of {elements[atom]} atom exceeded "
                    f"({used[atom] + order} > {caps[atom]})",
                )
        bonds[key] = order
        used[a] += order
        used[b] += order

    def add_atom(symbol: str, pos: int) -> int:
        nonlocal prev, pending
        idx = len(elements)
        elements.append(symbol)
        caps.append(table[symbol].max_valence)
        used.append(0)
        if prev >= 0:
            add_bond(prev, idx, pending if pending is not None else 1, pos)
        elif pending is not None:
            raise ParseError(pending_pos, "bond symbol before any atom")
        pending = None
        prev = idx
        return idx

    def ring_closure(num: int, pos: int):
        nonlocal pending
        if prev < 0:
            raise ParseError(pos, "ring closure before any atom")
        if num in open_rings:
            other, other_order, _ = open_rings.pop(num)
            order = 1
            if other_order is not None and pending is not None:
                if other_order != pending:
                    raise ParseError(pos, f"ring bond {num} order mismatch")
                order = pending
            elif other_order is not None:
                order = other_order
            elif pending is not None:
                order = pending
            add_bond(other, prev, order, pos)
        else:
            open_rings[num] = (prev, pending, pos)
        pending = None

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        two = text[i : i + 2]
        if two in _TWO_LETTER:
            add_atom(two, i)
            i += 2
            continue
        if ch in "CNOFPSI":
            add_atom(ch, i)
            i += 1
            continue
        if ch in _BOND_CHARS:
            if pending is not None:
                raise ParseError(i, "two consecutive bond symbols")
            pending = _BOND_CHARS[ch]
            pending_pos = i
            i += 1
            continue
        if ch == "(":
            if prev < 0:
                raise ParseError(i, "branch before any atom")
            if pending is not None:
                raise ParseError(i, "bond symbol before branch open")
            stack.append(prev)
            i += 1
            continue
        if ch == ")":
            if not stack:
                raise ParseError(i, "unmatched branch close")
            if pending is not None:
                raise ParseError(i, "dangling bond symbol before branch close")
            prev = stack.pop()
            i += 1
            continue
        if ch in "0123456789":
            ring_closure(int(ch), i)
            i += 1
            continue
        if ch == "%":
            pair = text[i + 1 : i + 3]
            if len(pair) < 2 or not all(c in "0123456789" for c in pair):
                raise ParseError(i, "% ring closure needs two digits")
            ring_closure(int(pair), i)
            i += 3
            continue
        if ch in _AROMATIC_CHARS:
            raise ParseError(i, "aromatic atoms unsupported; supply Kekulé form")
        if ch == "[":
            raise ParseError(
                i, "bracket atoms (charges, isotopes, explicit H) unsupported"
            )
        if ch == ".":
            raise ParseError(i, "disconnected structures unsupported")
        if ch in "/\\@":
            raise ParseError(i, "stereochemistry markers unsupported")
        if ch == "B":
            raise ParseError(i, "element B not in the supported alphabet")
        raise ParseError(i, f"unsupported character {ch!r}")

    if pending is not None:
        raise ParseError(pending_pos, "dangling bond symbol at end of input")
    if stack:
        raise ParseError(n, "unclosed branch")
    if open_rings:
        num, (_, _, pos) = next(iter(open_rings.items()))
        raise ParseError(pos, f"unclosed ring closure {num}")
    return Molecule(elements, [(a, b, o) for (a, b), o in bonds.items()], table)


# ---------------------------------------------------------------------------
# Canonical labeling and SMILES writer
# ---------------------------------------------------------------------------


def _refine_colors(colors: list[int], adj) -> list[int]:
    """Iterative neighborhood refinement until the partition is stable."""
    n = len(colors)
    distinct = len(set(colors))
    while True:
        keys = [
            (colors[i], tuple(sorted((o, colors[j]) for j, o in adj[i])))
            for i in range(n)
        ]
        order = sorted(set(keys))
        rank = {k: r for r, k in enumerate(order)}
        colors = [rank[k] for k in keys]
        new_distinct = len(set(colors))
        if new_distinct == distinct:
            return colors
        distinct = new_distinct


def _canonical_labeling(mol: Molecule) -> list[int]:
    """Atom labels minimizing the emitted SMILES, by individualization search."""
    n = len(mol.elements)
    adj = mol.adjacency
    initial = [
        (
            mol.elements[i],
            len(adj[i]),
            tuple(sorted(o for _, o in adj[i])),
            free_valence(mol, i),
        )
        for i in range(n)
    ]
    order = sorted(set(initial))
    rank = {k: r for r, k in enumerate(order)}
    colors = [rank[k] for k in initial]

    best: list[str | None] = [None]
    best_labels: list[list[int]] = [[]]
    budget = [20000]

    def search(colors: list[int]):
        colors = _refine_colors(colors, adj)
        cells: dict[int, list[int]] = {}
        for i, c in enumerate(colors):
            cells.setdefault(c, []).append(i)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            budget[0] -= 1
            if budget[0] < 0:
                raise RuntimeError("canonical labeling budget exceeded")
            smiles = _emit_smiles(mol, colors)
            if best[0] is None or smiles < best[0]:
                best[0] = smiles
                best_labels[0] = colors
            return
        for atom in target:
            child = [2 * c for c in colors]
            child[atom] -= 1
            search(child)

    if n == 0:
        return []
    search(colors)
    return best_labels[0]


def _emit_smiles(mol: Molecule, labels: list[int]) -> str:
    """Deterministic SMILES for a discrete labeling: DFS from label 0,
    neighbors in label order, ring closures numbered by appearance."""
    n = len(mol.elements)
    if n == 0:
        return ""
    adj = mol.adjacency
    start = labels.index(0)

    import sys

    limit = sys.getrecursionlimit()
    if n * 6 + 200 > limit:
        sys.setrecursionlimit(n * 6 + 200)
    try:
        # Discovery pass: classify tree vs ring-closure edges under
        # label-ordered DFS.
        disc = [-1] * n
        children: list[list[int]] = [[] for _ in range(n)]
        back_edges: list[tuple[int, int]] = []  # (earlier, later) by discovery
        counter = 0

        def discover(u: int, parent: int):
            nonlocal counter
            disc[u] = counter
            counter += 1
            for _, v in sorted((labels[v], v) for v, _ in adj[u]):
                if disc[v] == -1:
                    children[u].append(v)
                    discover(v, u)
                elif v != parent and disc[v] < disc[u]:
                    back_edges.append((v, u))

        discover(start, -1)

        # Closure numbers in order of first textual appearance.
        back_edges.sort(key=lambda e: (disc[e[0]], disc[e[1]]))
        closures: dict[int, list[tuple[int, int]]] = {}
        for num, (u, v) in enumerate(back_edges, start=1):
            order = mol.bond_order(u, v)
            closures.setdefault(u, []).append((num, order))
            closures.setdefault(v, []).append((num, order))

        bond_sym = {1: "", 2: "=", 3: "#"}

        def emit(u: int) -> str:
            parts = [mol.elements[u]]
            for num, order in closures.get(u, ()):
                parts.append(
                    bond_sym[order] + (str(num) if num < 10 else f"%{num:02d}")
                )
            kids = children[u]
            for k, v in enumerate(kids):
                seg = bond_sym[mol.bond_order(u, v)] + emit(v)
                parts.append(seg if k == len(kids) - 1 else "(" + seg + ")")
            return "".join(parts)

        return emit(start)
    finally:
        sys.setrecursionlimit(limit)


def write_smiles(mol: Molecule) -> str:
    """Canonical SMILES: identical output for isomorphic inputs."""
    cached = mol.__dict__.get("_canonical_smiles")
    if cached is not None:
        return cached
    if len(mol.elements) == 0:
        smiles = ""
    else:
        labels = _canonical_labeling(mol)
        smiles = _emit_smiles(mol, labels)
    mol.__dict__["_canonical_smiles"] = smiles
    return smiles


def canonical_key(mol: Molecule) -> CanonicalKey:
    """Permutation-invariant identity, the canonical written form."""
    return CanonicalKey(write_smiles(mol))

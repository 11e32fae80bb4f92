"""Independent reference implementations used to check the package.

Everything here is deliberately written against networkx and plain
graph surgery rather than the package's own enumeration/ring machinery,
so agreement between the two paths is meaningful.
"""

from __future__ import annotations

import itertools

import networkx as nx

from molforge.molgraph import Molecule, canonical_key


def to_nx(mol: Molecule) -> nx.Graph:
    g = nx.Graph()
    for i, sym in enumerate(mol.elements):
        g.add_node(i, element=sym)
    for a, b, o in mol.bonds:
        g.add_edge(a, b, order=o)
    return g


def isomorphic(a: Molecule, b: Molecule) -> bool:
    return nx.is_isomorphic(
        to_nx(a),
        to_nx(b),
        node_match=lambda x, y: x["element"] == y["element"],
        edge_match=lambda x, y: x["order"] == y["order"],
    )


def nx_ring_membership(mol: Molecule):
    """(atom_in_ring, bond_in_ring) via bridge detection."""
    g = to_nx(mol)
    bridges = {tuple(sorted(e)) for e in nx.bridges(g)} if g.number_of_edges() else set()
    bond_in_ring = {
        (a, b): (a, b) not in bridges for a, b, _ in mol.bonds
    }
    atom_in_ring = [False] * len(mol.elements)
    for (a, b), in_ring in bond_in_ring.items():
        if in_ring:
            atom_in_ring[a] = True
            atom_in_ring[b] = True
    return tuple(atom_in_ring), bond_in_ring


def nx_sssr_sizes(mol: Molecule) -> tuple[int, ...]:
    g = to_nx(mol)
    if g.number_of_nodes() == 0:
        return ()
    return tuple(sorted(len(c) for c in nx.minimum_cycle_basis(g)))


def _valid_molecule(elements, bonds, table) -> Molecule | None:
    """Build and validate; None when valence or connectivity fails."""
    try:
        return Molecule(elements, bonds, table)
    except Exception:
        return None


def oracle_successor_keys(mol: Molecule, cfg) -> set[str]:
    """Every conceivable single edit, filtered by validity and the
    documented heuristics, as a set of canonical keys.

    Generates candidates exhaustively with no symmetry shortcuts and no
    deduplication beyond the final key set.
    """
    table = cfg.table
    n = len(mol.elements)
    g = to_nx(mol)
    atom_in_ring, _ = nx_ring_membership(mol)
    keys: set[str] = set()

    def used(atom):
        return sum(o for _, o in mol.adjacency[atom])

    def fv(atom):
        return table.max_valence(mol.elements[atom]) - used(atom)

    # atom additions
    if n == 0:
        for sym in cfg.elements:
            keys.add(canonical_key(Molecule([sym], [], table)).text)
    else:
        for anchor in range(n):
            for sym in cfg.elements:
                for order in (1, 2, 3):
                    if order > fv(anchor) or order > table.max_valence(sym):
                        continue
                    cand = _valid_molecule(
                        list(mol.elements) + [sym],
                        list(mol.bonds) + [(anchor, n, order)],
                        table,
                    )
                    if cand is not None:
                        keys.add(canonical_key(cand).text)

        # bond additions (new bonds and order raises)
        for a, b in itertools.combinations(range(n), 2):
            old = mol.bond_order(a, b)
            for new in range(old + 1, 4):
                delta = new - old
                if delta > fv(a) or delta > fv(b):
                    continue
                if old == 0:
                    if atom_in_ring[a] and atom_in_ring[b]:
                        continue
                    path = nx.shortest_path_length(g, a, b)
                    if path + 1 not in cfg.allowed_ring_sizes:
                        continue
                bonds = [x for x in mol.bonds if (x[0], x[1]) != (a, b)]
                bonds.append((a, b, new))
                cand = _valid_molecule(mol.elements, bonds, table)
                if cand is not None:
                    keys.add(canonical_key(cand).text)

        # bond removals
        if cfg.allow_bond_removal:
            for a, b, old in mol.bonds:
                for new in range(0, old):
                    bonds = [x for x in mol.bonds if (x[0], x[1]) != (a, b)]
                    if new > 0:
                        bonds.append((a, b, new))
                        cand = _valid_molecule(mol.elements, bonds, table)
                        if cand is not None:
                            keys.add(canonical_key(cand).text)
                        continue
                    h = g.copy()
                    h.remove_edge(a, b)
                    comps = list(nx.connected_components(h))
                    if len(comps) == 1:
                        cand = _valid_molecule(mol.elements, bonds, table)
                        if cand is not None:
                            keys.add(canonical_key(cand).text)
                        continue
                    sizes = sorted(len(c) for c in comps)
                    if sizes[0] > 1:
                        continue
                    if sizes == [1, 1]:
                        kept = keep_lower_element(
                            mol.elements[a], mol.elements[b]
                        )
                        keys.add(
                            canonical_key(Molecule([kept], [], table)).text
                        )
                        continue
                    (drop,) = [c for c in comps if len(c) == 1][0]
                    remap = {}
                    elements = []
                    for i in range(n):
                        if i == drop:
                            continue
                        remap[i] = len(elements)
                        elements.append(mol.elements[i])
                    shifted = [
                        (remap[x], remap[y], o)
                        for x, y, o in bonds
                    ]
                    cand = _valid_molecule(elements, shifted, table)
                    if cand is not None:
                        keys.add(canonical_key(cand).text)

    if cfg.allow_no_modification:
        keys.add(canonical_key(mol).text)
    return keys


def value_iteration_chain(raw_rewards, max_steps, gamma, moves):
    """Exact optimal values for the test chain MDP.

    States are (position, t); actions move by the offsets in ``moves``
    with clamping; the stored reward of entering s' at time t' is
    gamma^(T - t') * raw(s'). Returns V[t][pos] = best sum of stored
    rewards from (pos, t) to the horizon.
    """
    n = len(raw_rewards)
    values = [[0.0] * n for _ in range(max_steps + 1)]
    for t in range(max_steps - 1, -1, -1):
        for pos in range(n):
            best = None
            for mv in moves:
                nxt = min(max(pos + mv, 0), n - 1)
                r = gamma ** (max_steps - (t + 1)) * raw_rewards[nxt]
                total = r + values[t + 1][nxt]
                if best is None or total > best:
                    best = total
            values[t][pos] = best
    return values


def keep_lower_element(sym_a: str, sym_b: str) -> str:
    """Two-singleton removal rule twin: kept element by alphabet order."""
    from molforge.molgraph import ORGANIC_SYMBOLS

    order = {s: i for i, s in enumerate(ORGANIC_SYMBOLS)}
    return sym_a if order[sym_a] <= order[sym_b] else sym_b

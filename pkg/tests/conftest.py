import random

import pytest

from molforge.actions import MdpConfig
from molforge.molgraph import DEFAULT_ELEMENTS, Molecule, parse_smiles


@pytest.fixture
def co_config():
    return MdpConfig(elements=("C", "O"), max_steps=40)


@pytest.fixture
def cno_config():
    return MdpConfig(elements=("C", "N", "O"), max_steps=40)


@pytest.fixture
def cyclohexane():
    return parse_smiles("C1CCCCC1")


def random_molecule(rng: random.Random, max_atoms=7, elements=("C", "N", "O")):
    """Random valid connected molecule grown by additions + ring closures."""
    n = rng.randint(1, max_atoms)
    elems = [rng.choice(elements)]
    bonds = {}
    caps = [DEFAULT_ELEMENTS.max_valence(elems[0])]
    used = [0]
    while len(elems) < n:
        anchors = [i for i in range(len(elems)) if used[i] < caps[i]]
        if not anchors:
            break
        a = rng.choice(anchors)
        sym = rng.choice(elements)
        k = rng.randint(
            1, min(caps[a] - used[a], DEFAULT_ELEMENTS.max_valence(sym), 3)
        )
        i = len(elems)
        elems.append(sym)
        caps.append(DEFAULT_ELEMENTS.max_valence(sym))
        used.append(k)
        used[a] += k
        bonds[(a, i)] = k
    for _ in range(rng.randint(0, 3)):
        pairs = [
            (i, j)
            for i in range(len(elems))
            for j in range(i + 1, len(elems))
            if (i, j) not in bonds and used[i] < caps[i] and used[j] < caps[j]
        ]
        if not pairs:
            break
        i, j = rng.choice(pairs)
        bonds[(i, j)] = 1
        used[i] += 1
        used[j] += 1
    return Molecule(elems, [(a, b, o) for (a, b), o in bonds.items()])


def permuted(mol: Molecule, rng: random.Random) -> Molecule:
    perm = list(range(len(mol.elements)))
    rng.shuffle(perm)
    inverse = {old: new for new, old in enumerate(perm)}
    return Molecule(
        [mol.elements[old] for old in perm],
        [(inverse[a], inverse[b], o) for a, b, o in mol.bonds],
        mol.table,
    )

import random
from collections import deque

import pytest

from molforge.actions import (
    Action,
    AtomAddition,
    BondChange,
    ForeignAction,
    MdpConfig,
    NoModification,
    State,
    TerminalState,
    apply,
    enumerate_atom_additions,
    enumerate_bond_additions,
    enumerate_bond_removals,
    valid_actions,
)
from molforge.molgraph import (
    Molecule,
    canonical_key,
    free_valence,
    new_empty,
    parse_smiles,
    write_smiles,
)

from .oracles import oracle_successor_keys


def successor_keys(actions) -> set[str]:
    return {canonical_key(a.successor).text for a in actions}


class TestAtomAdditions:
    def test_cyclohexane_four_unique(self, cyclohexane, co_config):
        actions = enumerate_atom_additions(cyclohexane, co_config)
        assert len(actions) == 4
        assert successor_keys(actions) == {
            write_smiles(parse_smiles(s))
            for s in ("CC1CCCCC1", "OC1CCCCC1", "O=C1CCCCC1", "C=C1CCCCC1")
        }

    def test_empty_one_per_element(self, co_config):
        actions = enumerate_atom_additions(new_empty(), co_config)
        assert successor_keys(actions) == {"C", "O"}
        assert all(a.kind.anchor is None for a in actions)

    def test_methane_three_orders(self):
        cfg = MdpConfig(elements=("C",))
        actions = enumerate_atom_additions(parse_smiles("C"), cfg)
        assert sorted(a.kind.order for a in actions) == [1, 2, 3]

    def test_order_capped_by_new_element(self, co_config):
        actions = enumerate_atom_additions(parse_smiles("C"), co_config)
        oxygens = [a for a in actions if a.kind.element == "O"]
        assert sorted(a.kind.order for a in oxygens) == [1, 2]


class TestBondAdditions:
    def test_ethane(self, co_config):
        actions = enumerate_bond_additions(parse_smiles("CC"), co_config)
        assert sorted(a.kind.new_order for a in actions) == [2, 3]

    def test_ethene(self, co_config):
        actions = enumerate_bond_additions(parse_smiles("C=C"), co_config)
        assert [a.kind.new_order for a in actions] == [3]

    def test_heptane_no_seven_ring(self, co_config):
        heptane = parse_smiles("CCCCCCC")
        for action in enumerate_bond_additions(heptane, co_config):
            if action.kind.old_order == 0:
                a, b = action.kind.a, action.kind.b
                assert abs(a - b) != 6

    def test_ring_sizes_respected(self):
        cfg = MdpConfig(elements=("C",), allowed_ring_sizes=frozenset({5}))
        hexane = parse_smiles("CCCCCC")
        rings = [
            a for a in enumerate_bond_additions(hexane, cfg)
            if a.kind.old_order == 0
        ]
        assert rings
        for action in rings:
            assert abs(action.kind.a - action.kind.b) == 4

    def test_no_new_bond_between_ring_atoms(self, co_config):
        # decorate cyclohexane with two substituent carbons; ring atoms
        # must not gain NEW bonds between each other, but raises stay legal
        mol = parse_smiles("CC1CCC(C)CC1")
        for action in enumerate_bond_additions(mol, co_config):
            if action.kind.old_order == 0:
                ring_atoms = {
                    i for i in range(mol.atom_count)
                    if mol.degree(i) >= 2 and i not in (0, 5)
                }
                assert not (
                    action.kind.a in ring_atoms and action.kind.b in ring_atoms
                )

    def test_raising_in_ring_bond_allowed(self, cyclohexane, co_config):
        raises = [
            a for a in enumerate_bond_additions(cyclohexane, co_config)
            if a.kind.old_order >= 1
        ]
        assert {a.kind.new_order for a in raises} == {2, 3}


class TestBondRemovals:
    def test_cyclohexane_single_opening(self, cyclohexane, co_config):
        actions = enumerate_bond_removals(cyclohexane, co_config)
        assert len(actions) == 1
        assert successor_keys(actions) == {write_smiles(parse_smiles("CCCCCC"))}

    def test_ethyne_three(self, co_config):
        actions = enumerate_bond_removals(parse_smiles("C#C"), co_config)
        assert successor_keys(actions) == {
            write_smiles(parse_smiles(s)) for s in ("C=C", "CC", "C")
        }

    def test_propane_terminal(self, co_config):
        actions = enumerate_bond_removals(parse_smiles("CCC"), co_config)
        keys = successor_keys(actions)
        assert write_smiles(parse_smiles("CC")) in keys

    def test_two_singleton_split_keeps_lower_code(self, co_config):
        # C-O single bond: full removal keeps the carbon
        actions = enumerate_bond_removals(parse_smiles("CO"), co_config)
        assert "C" in successor_keys(actions)
        assert "O" not in successor_keys(actions)

    def test_no_multiatom_fragments(self, co_config):
        butane = parse_smiles("CCCC")
        for action in enumerate_bond_removals(butane, co_config):
            assert len(action.successor.component_sizes()) <= 1


class TestValidActions:
    def test_cyclohexane_full_set(self, cyclohexane, co_config):
        actions = valid_actions(State(cyclohexane, 0), co_config)
        kinds = {}
        for a in actions:
            kinds.setdefault(type(a.kind).__name__, 0)
            kinds[type(a.kind).__name__] += 1
        assert kinds["AtomAddition"] == 4
        assert kinds["NoModification"] == 1
        keys = [canonical_key(a.successor).text for a in actions]
        assert len(set(keys)) == len(keys)

    def test_empty_three(self, co_config):
        actions = valid_actions(State(new_empty(), 0), co_config)
        assert len(actions) == 3

    def test_no_mod_preserves_key(self, cyclohexane, co_config):
        actions = valid_actions(State(cyclohexane, 3), co_config)
        no_mod = [a for a in actions if isinstance(a.kind, NoModification)]
        assert len(no_mod) == 1
        assert canonical_key(no_mod[0].successor) == canonical_key(cyclohexane)

    def test_terminal_raises(self, cyclohexane, co_config):
        with pytest.raises(TerminalState):
            valid_actions(State(cyclohexane, co_config.max_steps), co_config)

    def test_determinism(self, cyclohexane, co_config):
        a = valid_actions(State(cyclohexane, 0), co_config)
        b = valid_actions(State(cyclohexane, 0), co_config)
        assert [x.kind for x in a] == [y.kind for y in b]
        assert [write_smiles(x.successor) for x in a] == [
            write_smiles(y.successor) for y in b
        ]

    def test_isomorphic_states_same_action_keys(self, co_config):
        from .conftest import permuted, random_molecule

        rng = random.Random(77)
        for _ in range(40):
            mol = random_molecule(rng, max_atoms=6, elements=("C", "O"))
            twin = permuted(mol, rng)
            keys_a = [
                canonical_key(x.successor).text
                for x in valid_actions(State(mol, 0), co_config)
            ]
            keys_b = [
                canonical_key(x.successor).text
                for x in valid_actions(State(twin, 0), co_config)
            ]
            assert keys_a == keys_b

    def test_removals_respect_flag(self, cyclohexane):
        cfg = MdpConfig(elements=("C",), allow_bond_removal=False)
        actions = valid_actions(State(cyclohexane, 0), cfg)
        for a in actions:
            if isinstance(a.kind, BondChange):
                assert a.kind.new_order > a.kind.old_order

    def test_no_mod_respects_flag(self, cyclohexane):
        cfg = MdpConfig(elements=("C",), allow_no_modification=False)
        actions = valid_actions(State(cyclohexane, 0), cfg)
        assert not any(isinstance(a.kind, NoModification) for a in actions)


class TestOracleEquivalence:
    def test_bfs_from_empty(self, co_config):
        """Exhaustive agreement with the brute-force oracle within 3 steps."""
        start = new_empty()
        seen = {canonical_key(start).text: start}
        frontier = [start]
        for _depth in range(3):
            next_frontier = []
            for mol in frontier:
                actions = valid_actions(State(mol, 0), co_config)
                assert successor_keys(actions) | {
                    canonical_key(mol).text
                } == oracle_successor_keys(mol, co_config) | {
                    canonical_key(mol).text
                }
                for action in actions:
                    key = canonical_key(action.successor).text
                    if key not in seen:
                        seen[key] = action.successor
                        next_frontier.append(action.successor)
            frontier = next_frontier
        assert len(seen) > 20

    def test_random_states(self, cno_config):
        from .conftest import random_molecule

        rng = random.Random(99)
        for _ in range(30):
            mol = random_molecule(rng, max_atoms=6)
            got = successor_keys(valid_actions(State(mol, 0), cno_config))
            want = oracle_successor_keys(mol, cno_config)
            assert got == want


class TestClosureUnderInverse:
    def test_additions_reversible(self, co_config):
        from .conftest import random_molecule

        rng = random.Random(13)
        for _ in range(30):
            mol = random_molecule(rng, max_atoms=5, elements=("C", "O"))
            key = canonical_key(mol).text
            for action in enumerate_bond_additions(mol, co_config):
                back = enumerate_bond_removals(action.successor, co_config)
                assert key in successor_keys(back)


class TestApply:
    def test_deterministic_transition(self, cyclohexane, co_config):
        state = State(cyclohexane, 0)
        actions = valid_actions(state, co_config)
        target = [a for a in actions if isinstance(a.kind, AtomAddition)][0]
        nxt = apply(state, target, co_config)
        assert nxt.step == 1
        assert canonical_key(nxt.molecule) == canonical_key(target.successor)

    def test_no_mod_identity(self, cyclohexane, co_config):
        state = State(cyclohexane, 4)
        no_mod = [
            a for a in valid_actions(state, co_config)
            if isinstance(a.kind, NoModification)
        ][0]
        nxt = apply(state, no_mod, co_config)
        assert nxt.step == 5
        assert nxt.molecule == cyclohexane

    def test_horizon_reached(self, co_config):
        cfg = MdpConfig(elements=("C",), max_steps=3)
        state = State(new_empty(), 0)
        for _ in range(3):
            actions = valid_actions(state, cfg)
            state = apply(state, actions[0], cfg)
        assert state.is_terminal(cfg)
        with pytest.raises(TerminalState):
            valid_actions(state, cfg)

    def test_foreign_action(self, cyclohexane, co_config):
        other = parse_smiles("CCO")
        action = valid_actions(State(other, 0), co_config)[0]
        with pytest.raises(ForeignAction):
            apply(State(cyclohexane, 0), action, co_config)


class TestReachableValidity:
    def test_random_walk_validity(self, cno_config):
        rng = random.Random(3)
        for _episode in range(20):
            state = State(new_empty(), 0)
            while not state.is_terminal(cno_config):
                actions = valid_actions(state, cno_config)
                state = apply(
                    state, actions[rng.randrange(len(actions))], cno_config
                )
                mol = state.molecule
                mol._validate()
                for i in range(mol.atom_count):
                    assert free_valence(mol, i) >= 0

    def test_exhaustive_depth_three(self, co_config):
        frontier = [new_empty()]
        seen = {canonical_key(frontier[0]).text}
        for _ in range(3):
            nxt = []
            for mol in frontier:
                for action in valid_actions(State(mol, 0), co_config):
                    action.successor._validate()
                    key = canonical_key(action.successor).text
                    if key not in seen:
                        seen.add(key)
                        nxt.append(action.successor)
            frontier = nxt


class TestConfigValidation:
    def test_bad_ring_sizes(self):
        with pytest.raises(ValueError):
            MdpConfig(elements=("C",), allowed_ring_sizes=frozenset({2}))

    def test_bad_steps(self):
        with pytest.raises(ValueError):
            MdpConfig(elements=("C",), max_steps=0)

    def test_empty_alphabet(self):
        with pytest.raises(ValueError):
            MdpConfig(elements=())

    def test_unknown_element(self):
        with pytest.raises(ValueError):
            MdpConfig(elements=("C", "Xe"))

import random

import numpy as np
import pytest

from molforge.actions import MdpConfig, State
from molforge.fingerprint import (
    BitFingerprint,
    LengthMismatch,
    featurize,
    fingerprint_words,
    morgan_fingerprint,
    tanimoto,
    tanimoto_words,
)
from molforge.molgraph import new_empty, parse_smiles

from .conftest import permuted, random_molecule


class TestMorganFingerprint:
    def test_empty_all_zero(self):
        assert morgan_fingerprint(new_empty()).popcount == 0

    def test_isomorphic_equal(self):
        rng = random.Random(4)
        for _ in range(100):
            mol = random_molecule(rng)
            fp = morgan_fingerprint(mol)
            assert morgan_fingerprint(permuted(mol, rng)).bits == fp.bits

    def test_ethanol_vs_ether_radius2(self):
        a = morgan_fingerprint(parse_smiles("CCO"), radius=2)
        b = morgan_fingerprint(parse_smiles("COC"), radius=2)
        assert a.bits != b.bits

    def test_radius_zero_counts_atom_types(self):
        fp = morgan_fingerprint(parse_smiles("CCCC"), radius=0)
        # two environments: terminal CH3 and interior CH2
        assert fp.popcount == 2

    def test_deterministic_across_runs(self):
        # frozen value: guards the fixed hash function against drift
        fp = morgan_fingerprint(parse_smiles("C"), radius=1, length=64)
        assert fp.bits == morgan_fingerprint(parse_smiles("C"), radius=1, length=64).bits

    def test_subgraph_sensitivity(self, cno_config):
        """Adding any atom flips at least one bit, on a BFS corpus."""
        from molforge.actions import enumerate_atom_additions, valid_actions
        from molforge.molgraph import canonical_key

        frontier = [new_empty()]
        seen = {canonical_key(frontier[0]).text}
        changed = 0
        total = 0
        for _ in range(4):
            nxt = []
            for mol in frontier:
                base = morgan_fingerprint(mol)
                for action in enumerate_atom_additions(mol, cno_config):
                    total += 1
                    if morgan_fingerprint(action.successor).bits != base.bits:
                        changed += 1
                    key = canonical_key(action.successor).text
                    if key not in seen and action.successor.atom_count <= 5:
                        seen.add(key)
                        nxt.append(action.successor)
            frontier = nxt
        assert total > 100
        assert changed / total >= 0.99

    def test_bad_length(self):
        with pytest.raises(ValueError):
            morgan_fingerprint(parse_smiles("C"), length=100)


class TestTanimoto:
    def test_reflexive(self):
        fp = morgan_fingerprint(parse_smiles("CCO"))
        assert tanimoto(fp, fp) == 1.0

    def test_disjoint(self):
        a = BitFingerprint(0b0011, 64, 2)
        b = BitFingerprint(0b1100, 64, 2)
        assert tanimoto(a, b) == 0.0

    def test_formula(self):
        a = BitFingerprint((1 << 8) - 1, 64, 2)          # 8 bits
        b = BitFingerprint(((1 << 6) - 1) << 4, 64, 2)   # 6 bits, 4 shared
        assert tanimoto(a, b) == pytest.approx(4 / 10)

    def test_empty_vs_empty(self):
        a = BitFingerprint(0, 64, 2)
        assert tanimoto(a, a) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            tanimoto(BitFingerprint(1, 64, 2), BitFingerprint(1, 128, 2))

    def test_words_twin_agrees(self):
        rng = random.Random(6)
        for _ in range(50):
            mol_a = random_molecule(rng)
            mol_b = random_molecule(rng)
            fa = morgan_fingerprint(mol_a, 2)
            fb = morgan_fingerprint(mol_b, 2)
            wa = fingerprint_words(mol_a, 2, 2048)
            wb = fingerprint_words(mol_b, 2, 2048)
            assert tanimoto(fa, fb) == pytest.approx(tanimoto_words(wa, wb))

    def test_metric_properties_random(self):
        rng = np.random.default_rng(8)
        fps = [
            BitFingerprint(
                int.from_bytes(rng.bytes(32), "little"), 256, 2
            )
            for _ in range(60)
        ]
        for _ in range(1000):
            i, j, k = rng.integers(0, len(fps), size=3)
            a, b, c = fps[i], fps[j], fps[k]
            sab = tanimoto(a, b)
            assert 0.0 <= sab <= 1.0
            assert sab == tanimoto(b, a)
            # Jaccard distance triangle inequality
            dab, dbc, dac = 1 - sab, 1 - tanimoto(b, c), 1 - tanimoto(a, c)
            assert dac <= dab + dbc + 1e-12


class TestFeaturize:
    def test_dimension_default(self, cno_config):
        f = featurize(State(parse_smiles("CCO"), 0), cno_config)
        assert f.vector.shape == (2049,)

    def test_initial_and_terminal_flags(self, cno_config):
        mol = parse_smiles("CCO")
        assert featurize(State(mol, 0), cno_config).vector[-1] == 1.0
        t = cno_config.max_steps
        assert featurize(State(mol, t), cno_config).vector[-1] == 0.0

    def test_bits_are_binary(self, cno_config):
        f = featurize(State(parse_smiles("C1CCCCC1"), 10), cno_config)
        body = f.vector[:-1]
        assert set(np.unique(body)) <= {0.0, 1.0}

    def test_matches_fingerprint(self, cno_config):
        mol = parse_smiles("CC(=O)O")
        f = featurize(State(mol, 0), cno_config)
        fp = morgan_fingerprint(mol, 3, 2048)
        assert np.array_equal(f.vector[:-1], fp.as_array())

import math
import random

import numpy as np
import pytest

from molforge.actions import MdpConfig, State
from molforge.molgraph import new_empty, parse_smiles
from molforge.properties import logp
from molforge.rewards import (
    ConstrainedLogP,
    Maximize,
    MultiObjective,
    RewardSpec,
    TargetRange,
    constrained_reward,
    raw_reward,
    relative_improvement,
    reward_vector,
    scalarize,
    scalarize_vector,
    similarity,
    step_reward,
    target_range_reward,
)


class TestTargetRange:
    def test_inside(self):
        assert target_range_reward(175, 150, 200) == 1.0

    def test_below(self):
        assert target_range_reward(140, 150, 200) == -10.0

    def test_boundary_inclusive(self):
        assert target_range_reward(150, 150, 200) == 1.0
        assert target_range_reward(200, 150, 200) == 1.0

    def test_above(self):
        assert target_range_reward(260, 150, 200) == -60.0

    def test_continuity_and_monotonicity(self):
        lo, hi = 10.0, 20.0
        xs = np.linspace(0, 30, 301)
        ys = [target_range_reward(x, lo, hi) for x in xs]
        for x, y in zip(xs, ys):
            if lo <= x <= hi:
                assert y == 1.0
        below = [y for x, y in zip(xs, ys) if x < lo]
        assert all(b < c for b, c in zip(below, below[1:]))
        above = [y for x, y in zip(xs, ys) if x > hi]
        assert all(b > c for b, c in zip(above, above[1:]))
        # continuous approach to the boundary value 0 at distance 0
        assert target_range_reward(lo - 1e-9, lo, hi) == pytest.approx(0.0, abs=1e-8)

    def test_bad_range(self):
        with pytest.raises(ValueError):
            target_range_reward(1, 5, 2)


class TestConstrainedReward:
    def test_no_penalty_branch(self):
        origin = parse_smiles("C1CCCCC1")
        spec = ConstrainedLogP(origin, delta=0.0, penalty=100.0)
        mol = parse_smiles("CCCCCC")
        assert constrained_reward(mol, spec) == pytest.approx(logp(mol))

    def test_self_similarity(self):
        origin = parse_smiles("C1CCCCC1")
        spec = ConstrainedLogP(origin, delta=1.0, penalty=100.0)
        assert constrained_reward(origin, spec) == pytest.approx(logp(origin))

    def test_penalty_magnitude(self):
        origin = parse_smiles("C1CCCCC1")
        mol = parse_smiles("NNNN")
        sim = similarity(mol, origin)
        spec = ConstrainedLogP(origin, delta=0.6, penalty=100.0)
        expected = logp(mol) - 100.0 * (0.6 - sim)
        assert sim < 0.6
        assert constrained_reward(mol, spec) == pytest.approx(expected)

    def test_penalty_formula_near_threshold(self):
        # engineered similarity just below delta costs penalty * gap
        origin = parse_smiles("CCCCC")
        mol = parse_smiles("CCCCCC")
        sim = similarity(mol, origin)
        delta = min(1.0, sim + 0.01)
        spec = ConstrainedLogP(origin, delta=delta, penalty=100.0)
        assert constrained_reward(mol, spec) == pytest.approx(
            logp(mol) - 100.0 * (delta - sim)
        )

    def test_penalty_nonnegative_when_below(self):
        origin = parse_smiles("C1CCCCC1")
        spec = ConstrainedLogP(origin, delta=0.9, penalty=100.0)
        rng = random.Random(3)
        from .conftest import random_molecule

        for _ in range(50):
            mol = random_molecule(rng)
            sim = similarity(mol, origin)
            r = constrained_reward(mol, spec)
            if sim >= 0.9:
                assert r == pytest.approx(logp(mol))
            else:
                assert logp(mol) - r >= 0


class TestScalarize:
    def test_degenerate_weights(self):
        assert scalarize(0.0, 0.3, 0.8) == 0.8
        assert scalarize(1.0, 0.3, 0.8) == 0.3

    def test_mid(self):
        assert scalarize(0.4, 0.5, 0.8) == pytest.approx(0.68)

    def test_affine_in_arguments(self):
        w = 0.3
        for _ in range(20):
            a, b, c = random.random(), random.random(), random.random()
            assert scalarize(w, a + c, b) == pytest.approx(
                scalarize(w, a, b) + w * c
            )

    def test_monotone_in_w_iff_sim_dominates(self):
        assert scalarize(0.6, 0.9, 0.2) > scalarize(0.4, 0.9, 0.2)
        assert scalarize(0.6, 0.2, 0.9) < scalarize(0.4, 0.2, 0.9)

    def test_vector_generalization(self):
        assert scalarize_vector([0.2, 0.3, 0.5], [1, 2, 3]) == pytest.approx(2.3)
        with pytest.raises(ValueError):
            scalarize_vector([0.5], [1, 2])

    def test_bad_weight(self):
        with pytest.raises(ValueError):
            scalarize(1.5, 0, 0)


class TestStepReward:
    def test_terminal_undiscounted(self):
        spec = RewardSpec(Maximize("heavy_atom_count"), gamma=0.9)
        mol = parse_smiles("CCC")
        assert step_reward(spec, State(mol, 40), 40) == pytest.approx(3.0)

    def test_one_step_before(self):
        spec = RewardSpec(Maximize("heavy_atom_count"), gamma=0.9)
        mol = parse_smiles("CCC")
        assert step_reward(spec, State(mol, 39), 40) == pytest.approx(2.7)

    def test_final_only_mode(self):
        spec = RewardSpec(Maximize("heavy_atom_count"), gamma=0.9, per_step=False)
        mol = parse_smiles("CCC")
        assert step_reward(spec, State(mol, 10), 40) == 0.0
        assert step_reward(spec, State(mol, 40), 40) == pytest.approx(3.0)

    def test_discount_telescoping(self):
        """Applying the discount at emission equals discounting a raw
        trajectory at aggregation time."""
        spec = RewardSpec(Maximize("molecular_weight"), gamma=0.9)
        molecules = [parse_smiles("C" * n) for n in range(1, 9)]
        max_steps = len(molecules)
        emitted = sum(
            step_reward(spec, State(m, t + 1), max_steps)
            for t, m in enumerate(molecules)
        )
        aggregated = sum(
            spec.gamma ** (max_steps - (t + 1)) * raw_reward(spec, m)
            for t, m in enumerate(molecules)
        )
        assert emitted == pytest.approx(aggregated, abs=1e-12)

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            RewardSpec(Maximize("logp"), gamma=0.0)
        with pytest.raises(ValueError):
            RewardSpec(Maximize("logp"), gamma=1.0001)


class TestRelativeImprovement:
    def test_no_improvement(self):
        mol = parse_smiles("CCO")
        assert relative_improvement(mol, mol, "heavy_atom_fraction") == 0.0

    def test_maximal(self):
        from molforge.properties import register_property

        register_property("unit_test_frac", lambda m: min(m.atom_count / 4, 1.0),
                          replace=True)
        m0 = parse_smiles("CC")     # 0.5
        m1 = parse_smiles("CCCC")   # 1.0
        assert relative_improvement(m1, m0, "unit_test_frac") == pytest.approx(1.0)

    def test_partial(self):
        from molforge.properties import register_property

        register_property("unit_test_frac2", lambda m: m.atom_count / 10,
                          replace=True)
        m0 = parse_smiles("CCCCC")       # 0.5
        m1 = parse_smiles("CCCCCCC")     # 0.7
        assert relative_improvement(m1, m0, "unit_test_frac2") == pytest.approx(0.4)

    def test_division_by_zero(self):
        from molforge.properties import register_property

        register_property("unit_test_one", lambda m: 1.0, replace=True)
        with pytest.raises(ZeroDivisionError):
            relative_improvement(new_empty(), new_empty(), "unit_test_one")


class TestVariants:
    def test_maximize(self):
        spec = RewardSpec(Maximize("molecular_weight"))
        assert raw_reward(spec, parse_smiles("C")) == pytest.approx(16.043, abs=1e-3)

    def test_target_range_variant(self):
        spec = RewardSpec(TargetRange("molecular_weight", 150, 200))
        assert raw_reward(spec, parse_smiles("C")) == pytest.approx(
            -(150 - 16.043), abs=1e-3
        )

    def test_multi_objective_scalarization(self):
        origin = parse_smiles("C1CCCCC1")
        spec = RewardSpec(MultiObjective(origin, 0.5, "heavy_atom_fraction"))
        r = raw_reward(spec, origin)
        assert r == pytest.approx(0.5 * 1.0 + 0.5 * 0.15)

    def test_reward_vector_components(self):
        origin = parse_smiles("C1CCCCC1")
        spec = RewardSpec(MultiObjective(origin, 0.3, "heavy_atom_fraction"))
        vec = reward_vector(spec, origin)
        assert vec.components.shape == (2,)
        assert vec.components[0] == pytest.approx(1.0)
        assert vec.components[1] == pytest.approx(0.15)

    def test_delta_validation(self):
        with pytest.raises(ValueError):
            ConstrainedLogP(new_empty(), delta=1.5)

    def test_weight_validation(self):
        with pytest.raises(ValueError):
            MultiObjective(new_empty(), weight=-0.1, property="logp")

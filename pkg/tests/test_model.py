"""Model core: energies, conversions, Gibbs tables."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_model
from spinbench.errors import CapacityError, DimensionError, DomainError
from spinbench.model import (GibbsTable, IsingModel, QuboModel,
                             all_spin_configs, energy, energy_many,
                             flip_energy_change, gibbs_table, index_to_spins,
                             ising_to_qubo, map_config, qubo_energy,
                             qubo_to_ising, spins_to_index)


def naive_energy(model: IsingModel, s) -> float:
    """Independent per-term accumulation, dict order, pure Python floats."""
    total = 0.0
    for (i, j), w in model.couplings.items():
        total += w * int(s[i - 1]) * int(s[j - 1])
    for i, h in model.fields.items():
        total += h * int(s[i - 1])
    return total


class TestEnergy:
    def test_triangle_example(self, triangle_model):
        assert energy(triangle_model, [-1, 1, 1]) == pytest.approx(-2.75, abs=1e-12)

    def test_empty_model_zero(self):
        m = IsingModel(4)
        assert energy(m, [1, -1, 1, -1]) == 0.0

    def test_matches_naive_oracle(self):
        for seed in range(20):
            m = random_model(8, seed)
            rng = np.random.default_rng(seed + 100)
            s = rng.choice([-1, 1], size=8)
            assert energy(m, s) == pytest.approx(naive_energy(m, s), abs=1e-14)

    def test_length_mismatch(self, triangle_model):
        with pytest.raises(DimensionError):
            energy(triangle_model, [1, -1])

    def test_bad_alphabet(self, triangle_model):
        with pytest.raises(DomainError):
            energy(triangle_model, [1, 0, -1])

    def test_energy_many_matches_scalar(self):
        m = random_model(6, 3)
        configs = all_spin_configs(6)
        batch = energy_many(m, configs)
        for k in range(0, 64, 7):
            assert batch[k] == pytest.approx(energy(m, configs[k]), abs=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10_000), k=st.integers(1, 8))
    def test_flip_linearity(self, seed, k):
        m = random_model(8, seed)
        rng = np.random.default_rng(seed)
        s = rng.choice([-1, 1], size=8).astype(np.int8)
        flipped = s.copy()
        flipped[k - 1] = -flipped[k - 1]
        de = flip_energy_change(m, s, k)
        assert energy(m, flipped) - energy(m, s) == pytest.approx(de, abs=1e-12)


class TestModelValidation:
    def test_duplicate_pair_rejected(self):
        with pytest.raises(DomainError):
            IsingModel(3, {(1, 2): 1.0, (2, 1): 0.5})

    def test_self_coupling_rejected(self):
        with pytest.raises(DomainError):
            IsingModel(3, {(2, 2): 1.0})

    def test_out_of_range_rejected(self):
        with pytest.raises(DimensionError):
            IsingModel(3, {(1, 4): 1.0})
        with pytest.raises(DimensionError):
            IsingModel(3, fields={0: 1.0})

    def test_key_normalization(self):
        m = IsingModel(3, {(3, 1): 0.25})
        assert m.couplings == {(1, 3): 0.25}


class TestConversions:
    def test_triangle_to_qubo(self, triangle_model):
        qubo, offset = ising_to_qubo(triangle_model)
        assert qubo.diagonal(1) == pytest.approx(-1.0, abs=1e-12)
        assert qubo.diagonal(2) == pytest.approx(-2.5, abs=1e-12)
        assert qubo.diagonal(3) == pytest.approx(3.5, abs=1e-12)
        assert qubo.entries[(1, 2)] == pytest.approx(4.0, abs=1e-12)
        assert qubo.entries[(1, 3)] == pytest.approx(2.0, abs=1e-12)
        assert qubo.entries[(2, 3)] == pytest.approx(-3.0, abs=1e-12)
        assert offset == pytest.approx(-0.75, abs=1e-12)

    def test_triangle_qubo_energy_with_offset(self, triangle_model):
        qubo, offset = ising_to_qubo(triangle_model)
        e = qubo_energy(qubo, [0, 1, 1])
        assert e == pytest.approx(-2.0, abs=1e-12)
        assert e + offset == pytest.approx(-2.75, abs=1e-12)

    def test_qubo_recovers_triangle(self, triangle_model):
        qubo, offset_iq = ising_to_qubo(triangle_model)
        back, offset_qi = qubo_to_ising(qubo)
        assert back.couplings == triangle_model.couplings
        for i in range(1, 4):
            assert back.fields[i] == pytest.approx(
                triangle_model.fields[i], abs=1e-15)
        assert offset_iq + offset_qi == pytest.approx(0.0, abs=1e-12)

    def test_zero_model(self):
        qubo, offset = ising_to_qubo(IsingModel(3))
        assert offset == 0.0
        assert all(v == 0.0 for v in qubo.entries.values())

    def test_round_trip_exact(self):
        for seed in range(50):
            m = random_model(7, seed)
            qubo, c1 = ising_to_qubo(m)
            back, c2 = qubo_to_ising(qubo)
            assert back.couplings == m.couplings  # scaling by 4 is lossless
            # field recovery cancels a rounded difference: exact to 1e-12
            assert np.allclose(back.fields_vector, m.fields_vector, atol=1e-12)
            assert c1 + c2 == pytest.approx(0.0, abs=1e-12)

    def test_energy_identity_all_configs(self):
        for seed in range(10):
            m = random_model(6, seed)
            qubo, offset = ising_to_qubo(m)
            for s in all_spin_configs(6)[::5]:
                x = map_config(s)
                assert qubo_energy(qubo, x) + offset == pytest.approx(
                    energy(m, s), abs=1e-12)

    def test_argmin_sets_coincide(self):
        for seed in range(100):
            n = 4 + seed % 9  # up to 12
            m = random_model(n, seed)
            qubo, _ = ising_to_qubo(m)
            configs = all_spin_configs(n)
            e_ising = energy_many(m, configs)
            e_qubo = np.array([qubo_energy(qubo, map_config(s))
                               for s in configs])
            ising_arg = set(np.flatnonzero(e_ising <= e_ising.min() + 1e-10))
            qubo_arg = set(np.flatnonzero(e_qubo <= e_qubo.min() + 1e-10))
            assert ising_arg == qubo_arg

    def test_symmetric_qubo_input_folds_by_addition(self):
        q = QuboModel(2, {(1, 2): 1.0, (2, 1): 0.5})
        assert q.entries[(1, 2)] == 1.5


class TestMapConfig:
    def test_example_mapping(self):
        assert map_config([-1, 1, 1]).tolist() == [0, 1, 1]

    def test_all_plus(self):
        assert map_config([1, 1, 1]).tolist() == [1, 1, 1]

    def test_binary_to_spin(self):
        assert map_config([0, 1, 0]).tolist() == [-1, 1, -1]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=30))
    def test_round_trip_identity(self, values):
        assert map_config(map_config(values)).tolist() == values

    def test_bad_alphabet(self):
        with pytest.raises(DomainError):
            map_config([0, -1, 1])


class TestIndexing:
    def test_round_trip(self):
        for b in range(32):
            assert spins_to_index(index_to_spins(b, 5)) == b

    def test_index_zero_is_all_up(self):
        assert index_to_spins(0, 4).tolist() == [1, 1, 1, 1]


class TestGibbs:
    def test_single_spin_closed_form(self):
        m = IsingModel(1, fields={1: 1.0})
        table = gibbs_table(m, 1.0)
        expected = math.e / (math.e + 1 / math.e)
        assert table.prob_of([-1]) == pytest.approx(expected, abs=1e-12)
        assert table.prob_of([-1]) == pytest.approx(0.880797, abs=1e-6)

    def test_beta_zero_uniform(self):
        m = random_model(6, 0)
        table = gibbs_table(m, 0.0)
        assert np.allclose(table.probabilities, 1 / 64, atol=1e-15)

    def test_normalization(self):
        for seed in range(5):
            table = gibbs_table(random_model(8, seed), 1.7)
            assert abs(table.probabilities.sum() - 1.0) < 1e-12

    def test_most_probable_is_ground_state(self):
        m = random_model(10, 4)
        table = gibbs_table(m, 2.0)
        configs = all_spin_configs(10)
        ground = configs[int(np.argmin(energy_many(m, configs)))]
        assert np.array_equal(table.most_probable(), ground)

    def test_monotone_in_energy(self):
        m = random_model(6, 9)
        table = gibbs_table(m, 1.3)
        order = np.argsort(table.energies)
        e_sorted = table.energies[order]
        p_sorted = table.probabilities[order]
        for k in range(len(order) - 1):
            if e_sorted[k] < e_sorted[k + 1] - 1e-12:
                assert p_sorted[k] > p_sorted[k + 1]

    def test_log_partition_large_beta(self):
        m = random_model(6, 2)
        table = gibbs_table(m, 200.0)
        assert math.isfinite(table.log_partition)
        assert abs(table.probabilities.sum() - 1.0) < 1e-12

    def test_cap_enforced(self):
        with pytest.raises(CapacityError):
            gibbs_table(random_model(9, 0), 1.0, cap=8)

    def test_table_dict_view(self):
        m = random_model(3, 1)
        table = gibbs_table(m, 0.9)
        d = table.as_dict()
        assert len(d) == 8
        assert abs(sum(d.values()) - 1.0) < 1e-12
        assert isinstance(table, GibbsTable)

"""Potts clustering: local energies, projectors, decode soundness."""

import numpy as np
import pytest

from spinbench.errors import StructureError
from spinbench.instances import InstanceClass, LatticeSpec, build_lattice, generate
from spinbench.model import IsingModel, energy
from spinbench.peps import (ClusterAssignment, build_projectors,
                            cluster_to_potts)


def lattice_potts(rows, cols, cell, seed, cls=InstanceClass.RAU):
    spec = LatticeSpec(rows, cols, cell, diagonal_edges=True)
    model = generate(cls, build_lattice(spec), seed=seed)
    assignment = ClusterAssignment.from_lattice(spec)
    return model, cluster_to_potts(model, assignment)


class TestClustering:
    def test_two_spin_cell_local_table(self):
        model = IsingModel(2, {(1, 2): 1.0})
        assignment = ClusterAssignment(1, 1, {(0, 0): (1, 2)})
        potts = cluster_to_potts(model, assignment)
        cell = potts.cells[(0, 0)]
        # states 0..3 decode to (+,+), (-,+), (+,-), (-,-): energies 1,-1,-1,1
        assert cell.local_energies.tolist() == [1.0, -1.0, -1.0, 1.0]

    def test_decode_energy_match(self):
        model, potts = lattice_potts(3, 3, 2, seed=0)
        rng = np.random.default_rng(1)
        from spinbench.model import energy_many
        states = rng.integers(0, 4, size=(10_000, 9))
        spins = np.stack([potts.decode(row) for row in states])
        ising = energy_many(model, spins)
        potts_side = np.array([potts.potts_energy(row) for row in states])
        assert np.allclose(potts_side, ising, atol=1e-10)

    def test_unassigned_spin_rejected(self):
        model = IsingModel(3, {(1, 2): 1.0})
        assignment = ClusterAssignment(1, 1, {(0, 0): (1, 2)})
        with pytest.raises(StructureError):
            cluster_to_potts(model, assignment)

    def test_nonadjacent_coupling_rejected(self):
        model = IsingModel(3, {(1, 3): 1.0})
        assignment = ClusterAssignment(
            1, 3, {(0, 0): (1,), (0, 1): (2,), (0, 2): (3,)})
        with pytest.raises(StructureError):
            cluster_to_potts(model, assignment)

    def test_cluster_cap(self):
        model = IsingModel(9)
        assignment = ClusterAssignment(1, 1, {(0, 0): tuple(range(1, 10))})
        with pytest.raises(StructureError):
            cluster_to_potts(model, assignment)

    def test_trivial_edge_without_crossings(self):
        # two cells, no couplers between them: reduced pair table is 1x1 zero
        model = IsingModel(2, fields={1: 0.5, 2: -0.5})
        assignment = ClusterAssignment(1, 2, {(0, 0): (1,), (0, 1): (2,)})
        potts = cluster_to_potts(model, assignment)
        edge = potts.edges[((0, 0), (0, 1))]
        assert edge.pair_energies.shape == (1, 1)
        assert edge.pair_energies[0, 0] == 0.0


class TestProjectors:
    def test_partial_boundary_dimension(self):
        # two-spin cells, only the first spin couples across
        crossings = [(1, 3, 0.7)]
        pa, pb, table = build_projectors((1, 2), (3, 4), crossings)
        assert pa.reduced_dim == 2
        assert pb.reduced_dim == 2
        assert table.shape == (2, 2)

    def test_full_boundary_is_identity(self):
        crossings = [(1, 3, 0.5), (2, 4, -0.5), (1, 4, 0.2), (2, 3, 0.1)]
        pa, pb, _ = build_projectors((1, 2), (3, 4), crossings)
        assert pa.reduced_dim == 4
        assert np.array_equal(pa.index_map, np.arange(4))

    def test_reconstruction_matches_dense_table(self):
        rng = np.random.default_rng(2)
        spins_a, spins_b = (1, 2), (3, 4)
        crossings = [(i, j, float(rng.uniform(-1, 1)))
                     for i in spins_a for j in spins_b if rng.random() < 0.7]
        if not crossings:
            crossings = [(1, 3, 0.4)]
        pa, pb, table = build_projectors(spins_a, spins_b, crossings)
        from spinbench.model import index_to_spins
        for xa in range(4):
            for xb in range(4):
                sa = index_to_spins(xa, 2)
                sb = index_to_spins(xb, 2)
                direct = sum(w * sa[spins_a.index(i)] * sb[spins_b.index(j)]
                             for (i, j, w) in crossings)
                assert table[pa.index_map[xa], pb.index_map[xb]] == \
                    pytest.approx(direct, abs=1e-12)

    def test_empty_crossings(self):
        pa, pb, table = build_projectors((1,), (2,), [])
        assert pa.reduced_dim == 1 and pb.reduced_dim == 1
        assert table.shape == (1, 1) and table[0, 0] == 0.0

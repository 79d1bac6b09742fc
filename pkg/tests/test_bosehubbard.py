import numpy as np
import pytest

import boselab as bl
from boselab.bosehubbard import BhChainSpec, lattice_params, perturbation_profile
from boselab.errors import ValidationError
from boselab.gates import pair_basis
from oracles import DenseChain


class TestHoppingProfile:
    def test_pth_formula_midpoint(self):
        j = bl.hopping_profile("PTH", 10, 2.0)
        assert abs(j[4] - 5.0) < 1e-12  # (lam/2) sqrt(5*5)

    def test_ch_all_ones(self):
        assert np.allclose(bl.hopping_profile("CH", 7), np.ones(6))

    def test_pth_symmetry(self):
        j = bl.hopping_profile("PTH", 9, 1.7)
        assert np.allclose(j, j[::-1])

    def test_rejects(self):
        with pytest.raises(ValidationError):
            bl.hopping_profile("XX", 5)
        with pytest.raises(ValidationError):
            bl.hopping_profile("PTH", 1)


class TestGates:
    def test_zero_time_identity(self):
        spec = BhChainSpec.uniform(3, 1.0, 0.7, 0.2)
        gate = bl.build_gate(spec, 0, 0.0, d=4)
        for q, blk in gate.blocks.items():
            assert np.allclose(blk, np.eye(blk.shape[0]), atol=1e-12)

    def test_trivial_hamiltonian_identity(self):
        spec = BhChainSpec.uniform(3, 0.0, 0.0, 0.0)
        gate = bl.build_gate(spec, 1, -0.3j, d=3)
        for blk in gate.blocks.values():
            assert np.allclose(blk, np.eye(blk.shape[0]), atol=1e-12)

    def test_single_boson_rotation_closed_form(self):
        # N=2, M=1, J=1: the Q=1 block is a 2x2 hopping rotation
        spec = BhChainSpec(np.zeros(2), [1.0], np.zeros(2))
        dt = 0.4
        gate = bl.build_gate(spec, 0, -1j * dt, d=2)
        expect = np.array([[np.cos(dt), 1j * np.sin(dt)],
                           [1j * np.sin(dt), np.cos(dt)]])
        assert np.max(np.abs(gate.block(1) - expect)) < 1e-12

    def test_gates_unitary_for_real_time(self):
        spec = BhChainSpec.uniform(4, 2.0, 0.7, -0.1)
        gate = bl.build_gate(spec, 1, -0.05j, d=5)
        assert gate.is_unitary()

    def test_forward_backward_inverse(self):
        spec = BhChainSpec.uniform(3, 1.5, 0.3)
        fwd = bl.build_gate(spec, 0, -0.07j, d=4)
        bwd = bl.build_gate(spec, 0, +0.07j, d=4)
        for q in fwd.blocks:
            prod = fwd.block(q) @ bwd.block(q)
            assert np.max(np.abs(prod - np.eye(prod.shape[0]))) < 1e-10

    def test_gate_conserves_charge_sector(self):
        rng = np.random.default_rng(0)
        spec = BhChainSpec.uniform(3, 1.0, 0.5)
        st = bl.CanonicalMps.from_product_fock([2, 0, 0])
        gate = bl.build_gate(spec, 0, -0.1j, st.local_dim)
        st.apply_two_site(0, gate)
        basis, amps = st.to_dense()
        for occ, a in zip(basis, amps):
            if abs(a) > 1e-12:
                assert sum(occ) == 2


class TestBondSplit:
    """The weighted bond generators must sum to the full Hamiltonian."""

    @pytest.mark.parametrize("n,m", [(2, 2), (3, 2), (4, 3)])
    def test_bond_sum_reproduces_dense(self, n, m):
        rng = np.random.default_rng(n * 10 + m)
        spec = BhChainSpec(rng.uniform(0, 2, n), rng.uniform(0.1, 1, n - 1),
                           rng.uniform(-1, 1, n))
        d = m + 1
        dense = DenseChain(n, m, spec.repulsions, spec.hoppings, spec.potentials)
        h_full = dense.hamiltonian()
        # accumulate bond terms applied to every basis state
        acc = np.zeros_like(h_full)
        for bond in range(n - 1):
            blocks = spec.bond_blocks(bond, d)
            for s, i in dense.index.items():
                q = s[bond] + s[bond + 1]
                if q not in blocks:
                    continue
                basis = pair_basis(d, q)
                if (s[bond], s[bond + 1]) not in basis:
                    continue
                col = basis.index((s[bond], s[bond + 1]))
                for row, (i2, j2) in enumerate(basis):
                    t = list(s)
                    t[bond], t[bond + 1] = i2, j2
                    if max(t) >= d:
                        continue
                    acc[dense.index[tuple(t)], i] += blocks[q][row, col].real
        assert np.max(np.abs(acc - h_full)) < 1e-10


class TestTrotterSchedule:
    def test_n4_pattern(self):
        sched = bl.trotter_schedule(4)
        assert sched == [(0, 0.5), (2, 0.5), (1, 1.0), (0, 0.5), (2, 0.5)]

    def test_n2_merges(self):
        assert bl.trotter_schedule(2) == [(0, 1.0)]

    def test_weights_sum_to_one_per_bond(self):
        for n in range(2, 9):
            totals = {}
            for bond, w in bl.trotter_schedule(n):
                totals[bond] = totals.get(bond, 0.0) + w
            assert set(totals) == set(range(n - 1))
            assert all(abs(w - 1.0) < 1e-12 for w in totals.values())

    def test_commuting_halves_compose(self):
        # diagonal Hamiltonian: two half steps equal one full step exactly
        spec = BhChainSpec.uniform(2, 1.3, 0.0, 0.4)
        half = bl.build_gate(spec, 0, -0.05, d=3)
        full = bl.build_gate(spec, 0, -0.10, d=3)
        for q in full.blocks:
            assert np.max(np.abs(half.block(q) @ half.block(q)
                                 - full.block(q))) < 1e-12


class TestPerturbation:
    def test_zero_epsilon(self):
        tables = perturbation_profile(8, 2.5, 0.0, d=9)
        assert np.max(np.abs(tables)) == 0.0

    def test_worked_constants(self):
        # N=8, n0=2.5: terminal h(x) = eps(-x^2 + 9.5 x)
        eps = 0.13
        tables = perturbation_profile(8, 2.5, eps, d=9)
        x = np.arange(9)
        assert np.allclose(tables[0], eps * (-x**2 + 9.5 * x))
        assert np.allclose(tables[-1], tables[0])

    def test_balance_identity(self):
        # h(n0 + (N/4 - k/2) + 1/2) - h(n0 + (N/4 - k/2)) = eps k / 2
        n, n0, eps = 8, 2.5, 0.31
        c2, c1 = -eps, ((n + 1) / 2 + 2 * n0) * eps

        def h(x):
            return c2 * x**2 + c1 * x

        for k in range(1, n // 2):
            y = n0 + (n / 4 - k / 2)
            assert abs(h(y + 0.5) - h(y) - eps * k / 2) < 1e-12

    def test_intermediate_sites_linear(self):
        tables = perturbation_profile(6, 1.0, 1.0, d=4)
        x = np.arange(4)
        assert np.allclose(tables[1], 1 * x)
        assert np.allclose(tables[2], 2 * x)
        assert np.allclose(tables[3], 2 * x)
        assert np.allclose(tables[4], 1 * x)


class TestLatticeParams:
    def test_quoted_constants(self):
        from boselab.bosehubbard import LATTICE_A, LATTICE_B, LATTICE_C
        assert (LATTICE_A, LATTICE_B, LATTICE_C) == (1.397, 1.051, 2.121)

    def test_j_decays_with_depth(self):
        depths = [5.0, 10.0, 20.0, 40.0]
        js = [lattice_params(v, 25.0, 0.01, 1.0)[0] for v in depths]
        assert all(a > b for a, b in zip(js, js[1:]))
        assert js[-1] > 0

    def test_u_linear_in_scattering_length(self):
        _, u1 = lattice_params(10.0, 25.0, 0.01, 1.0)
        _, u2 = lattice_params(10.0, 25.0, 0.02, 1.0)
        assert abs(u2 - 2 * u1) < 1e-12

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            lattice_params(-1.0, 25.0, 0.01, 1.0)

"""Truncated rotor: codewords, recovery protocol, invariant simulation."""

import itertools

import numpy as np
import pytest

from ssrqec.hilbert import (Operator, ProductSpace, StateVector, apply,
                            basis_state, identity, inner, tensor_product)
from ssrqec.rotor import (GroupDiscretization, RotorSpace, build_codeword,
                          charge_operator, charge_state, enumerate_recovery,
                          logical_fidelity, m_inv, phase_flip, phase_state,
                          prepare_simulated_superposition,
                          recover_by_measuring_B, shift_up,
                          total_charge_operator,
                          wrong_guess_error_probability)

INV_SQRT2 = 1 / np.sqrt(2)


def superpose(space, charges, profile, window):
    q1, q2 = charges
    w1, _ = build_codeword(space, space, q1, profile, window)
    w2, _ = build_codeword(space, space, q2, profile, window)
    return StateVector(w1.space,
                       (w1.amplitudes + w2.amplitudes) * INV_SQRT2)


class TestChargeBasis:
    def test_charge_zero_is_center_index(self):
        space = RotorSpace(2)
        np.testing.assert_allclose(charge_state(space, 0).amplitudes,
                                   np.eye(5)[2])

    def test_orthonormality(self):
        space = RotorSpace(2)
        for q, qp in itertools.product(range(-2, 3), repeat=2):
            val = inner(charge_state(space, q), charge_state(space, qp))
            assert val == (1.0 if q == qp else 0.0)

    def test_charge_operator_eigenrelation(self):
        space = RotorSpace(3)
        q_op = charge_operator(space)
        for q in range(-3, 4):
            out = apply(q_op, charge_state(space, q))
            np.testing.assert_allclose(
                out.amplitudes, q * charge_state(space, q).amplitudes)

    def test_out_of_range_charge_rejected(self):
        with pytest.raises(ValueError):
            charge_state(RotorSpace(2), 3)


class TestShiftUp:
    def test_raises_charge_by_one(self):
        space = RotorSpace(2)
        out = apply(shift_up(space), charge_state(space, 0))
        np.testing.assert_allclose(out.amplitudes,
                                   charge_state(space, 1).amplitudes)

    def test_top_charge_annihilated(self):
        space = RotorSpace(2)
        out = apply(shift_up(space), charge_state(space, 2))
        assert out.norm() == 0.0


class TestPhaseFlip:
    def test_flips_target_charge_only(self):
        space = RotorSpace(2)
        z = phase_flip(space, 1)
        out = apply(z, charge_state(space, 1))
        np.testing.assert_allclose(out.amplitudes,
                                   -charge_state(space, 1).amplitudes)
        out2 = apply(z, charge_state(space, -1))
        np.testing.assert_allclose(out2.amplitudes,
                                   charge_state(space, -1).amplitudes)

    def test_involution(self):
        space = RotorSpace(3)
        z = phase_flip(space, -2)
        np.testing.assert_allclose((z @ z).dense(), np.eye(space.dim))


class TestBuildCodeword:
    def test_window_zero_is_product_state(self):
        space = RotorSpace(2)
        psi, rec = build_codeword(space, space, 0, "uniform", 0)
        expect = tensor_product(charge_state(space, 0), charge_state(space, 0))
        np.testing.assert_allclose(psi.amplitudes, expect.amplitudes)
        assert rec.coeff(0) == pytest.approx(1.0)

    def test_uniform_window_one_expansion(self):
        space = RotorSpace(3)
        psi, _ = build_codeword(space, space, 1, "uniform", 1)
        expect = np.zeros(space.dim ** 2, dtype=complex)
        for qa, qb in ((2, -1), (1, 0), (0, 1)):
            expect[space.index(qa) * space.dim + space.index(qb)] = INV_SQRT2 * np.sqrt(2 / 3)
        np.testing.assert_allclose(psi.amplitudes, expect, atol=1e-12)

    def test_total_charge_eigenstate(self):
        space = RotorSpace(4)
        for q in (-1, 0, 2):
            psi, _ = build_codeword(space, space, q, "gaussian", 2)
            q_tot = total_charge_operator(space, 2)
            out = apply(q_tot, psi)
            np.testing.assert_allclose(out.amplitudes, q * psi.amplitudes,
                                       atol=1e-12)

    def test_window_overflow_rejected(self):
        space = RotorSpace(2)
        with pytest.raises(ValueError):
            build_codeword(space, space, 2, "uniform", 1)


class TestRecovery:
    @pytest.mark.parametrize("window", [1, 2, 4])
    @pytest.mark.parametrize("profile", ["uniform", "gaussian"])
    def test_no_error_every_outcome_faithful(self, window, profile):
        space = RotorSpace(6)
        psi = superpose(space, (0, 1), profile, window)
        for oc in enumerate_recovery(psi, (0, 1)):
            fid = logical_fidelity(oc.alpha, oc.beta, INV_SQRT2, INV_SQRT2)
            assert fid == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("window", [1, 2, 4])
    def test_b_side_flips_every_outcome_faithful(self, window):
        space = RotorSpace(6)
        psi = superpose(space, (0, 1), "gaussian", window)
        ident_a = identity(space.product_space())
        for charges in itertools.combinations(range(-3, 4), 2):
            err = ident_a
            z = phase_flip(space, charges[0]) @ phase_flip(space, charges[1])
            corrupted = apply(tensor_product(ident_a, z), psi)
            for oc in enumerate_recovery(corrupted, (0, 1)):
                fid = logical_fidelity(oc.alpha, oc.beta, INV_SQRT2, INV_SQRT2)
                assert fid == pytest.approx(1.0, abs=1e-10)

    def test_probabilities_sum_to_one(self):
        space = RotorSpace(5)
        psi = superpose(space, (0, 1), "uniform", 2)
        total = sum(oc.probability for oc in enumerate_recovery(psi, (0, 1)))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_outcome_selection(self):
        space = RotorSpace(5)
        psi = superpose(space, (0, 1), "uniform", 2)
        oc = recover_by_measuring_B(psi, (0, 1), outcome=1)
        assert oc.outcome == 1

    def test_impossible_outcome_rejected(self):
        space = RotorSpace(5)
        psi = superpose(space, (0, 1), "uniform", 1)
        with pytest.raises(ValueError):
            recover_by_measuring_B(psi, (0, 1), outcome=4)

    def test_sampled_outcome_reproducible(self):
        space = RotorSpace(5)
        psi = superpose(space, (0, 1), "uniform", 2)
        a = recover_by_measuring_B(psi, (0, 1), rng=np.random.default_rng(1))
        b = recover_by_measuring_B(psi, (0, 1), rng=np.random.default_rng(1))
        assert a.outcome == b.outcome


class TestWrongGuessBound:
    def test_uniform_profile_error_bound(self):
        space = RotorSpace(10)
        for window in (1, 2, 4, 8):
            p_err = wrong_guess_error_probability(space, space, (0, 1), 0,
                                                  "uniform", window)
            assert p_err <= 2.0 / (2 * window + 1) + 1e-12

    def test_monotone_nonincreasing_in_window(self):
        space = RotorSpace(10)
        probs = [wrong_guess_error_probability(space, space, (0, 1), 0,
                                               "uniform", w)
                 for w in (1, 2, 4, 8)]
        assert all(b <= a + 1e-12 for a, b in zip(probs, probs[1:]))


class TestMInv:
    def setup_method(self):
        self.space = RotorSpace(2)
        self.d = self.space.dim
        self.disc = GroupDiscretization(self.d)

    def random_op(self, rng):
        m = rng.normal(size=(self.d, self.d)) + 1j * rng.normal(
            size=(self.d, self.d))
        return Operator(self.space.product_space(), m)

    def random_density(self, rng):
        a = rng.normal(size=(self.d, self.d)) + 1j * rng.normal(
            size=(self.d, self.d))
        rho = a @ a.conj().T
        return rho / np.trace(rho)

    def charge_diagonal_density(self, rng):
        w = rng.random(self.d)
        return np.diag(w / w.sum()).astype(complex)

    def test_trace_property_sector_respecting_states(self):
        # the invariant holds exactly for system states diagonal in charge
        # (SSR-respecting); the reference register state is unrestricted
        rng = np.random.default_rng(42)
        for _ in range(100):
            m = self.random_op(rng)
            rho_r = self.random_density(rng)
            rho_s = self.charge_diagonal_density(rng)
            lhs = np.trace(m_inv(m, self.disc).dense() @ np.kron(rho_r, rho_s))
            rhs = np.trace(m.dense() @ rho_s)
            assert abs(lhs - rhs) < 1e-9

    def test_homomorphism(self):
        rng = np.random.default_rng(43)
        for _ in range(100):
            m1, m2 = self.random_op(rng), self.random_op(rng)
            lhs = (m_inv(m1, self.disc) @ m_inv(m2, self.disc)).dense()
            rhs = m_inv(m1 @ m2, self.disc).dense()
            assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_shift_example(self):
        # M = U+ acting on |0>_R |0>_S lands on |-1>_R |1>_S
        out = apply(m_inv(shift_up(self.space), self.disc),
                    tensor_product(charge_state(self.space, 0),
                                   charge_state(self.space, 0)))
        expect = tensor_product(charge_state(self.space, -1),
                                charge_state(self.space, 1))
        np.testing.assert_allclose(out.amplitudes, expect.amplitudes,
                                   atol=1e-12)

    def test_trace_property_exact_for_larger_n_g(self):
        rng = np.random.default_rng(44)
        m = self.random_op(rng)
        rho_r = self.random_density(rng)
        rho_s = self.charge_diagonal_density(rng)
        rhs = np.trace(m.dense() @ rho_s)
        for n_g in (self.d, self.d + 3, 2 * self.d):
            disc = GroupDiscretization(n_g)
            lhs = np.trace(m_inv(m, disc).dense() @ np.kron(rho_r, rho_s))
            assert abs(lhs - rhs) < 1e-12

    def test_small_n_g_rejected(self):
        rng = np.random.default_rng(45)
        with pytest.raises(ValueError):
            m_inv(self.random_op(rng), GroupDiscretization(self.d - 1))

    def test_phase_states_orthonormal_at_matching_n_g(self):
        states = [phase_state(self.space, self.disc, m) for m in range(self.d)]
        g = np.array([[inner(a, b) for b in states] for a in states])
        np.testing.assert_allclose(g, np.eye(self.d), atol=1e-12)


class TestSimulatedSuperposition:
    def test_single_charge_window_zero(self):
        space = RotorSpace(3)
        psi = prepare_simulated_superposition({2: 1.0}, space, "uniform", 0)
        d = space.dim
        expect = np.zeros(d ** 3, dtype=complex)
        ir, ia, ib = space.index(-2), space.index(2), space.index(0)
        expect[(ir * d + ia) * d + ib] = 1.0
        np.testing.assert_allclose(psi.amplitudes, expect)

    def test_total_charge_zero(self):
        space = RotorSpace(4)
        alphas = {0: INV_SQRT2, 1: INV_SQRT2}
        psi = prepare_simulated_superposition(alphas, space, "gaussian", 2)
        out = apply(total_charge_operator(space, 3), psi)
        assert out.norm() < 1e-12

    def test_recovery_rides_along_with_reference(self):
        # B-only phase flips on the simulated R (x) A (x) B state still
        # recover the logical pair on every outcome
        space = RotorSpace(4)
        alphas = {0: 0.6, 1: 0.8}
        psi = prepare_simulated_superposition(alphas, space, "uniform", 2)
        ident = identity(space.product_space())
        err = tensor_product(tensor_product(ident, ident),
                             phase_flip(space, 1) @ phase_flip(space, -2))
        corrupted = apply(err, psi)
        outcomes = list(enumerate_recovery(corrupted, (0, 1)))
        assert outcomes
        for oc in outcomes:
            fid = logical_fidelity(oc.alpha, oc.beta, 0.6, 0.8)
            assert fid == pytest.approx(1.0, abs=1e-10)

    def test_unnormalized_alphas_rejected(self):
        with pytest.raises(ValueError):
            prepare_simulated_superposition({0: 1.0, 1: 1.0}, RotorSpace(3))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decolab import channels as ch
from decolab import operator_core as oc
from decolab.errors import PhysicsError

from conftest import random_density, random_state, random_unitary

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


class TestApplyChannel:
    def test_identity_kraus(self, rng):
        rho = random_density(rng, 3)
        out = ch.apply_channel([np.eye(3, dtype=complex)], rho)
        assert np.max(np.abs(out - rho)) < 1e-14

    def test_qubit_dephasing_scales_coherence(self):
        p = 0.3
        ops = [np.sqrt(1 - p) * np.eye(2, dtype=complex), np.sqrt(p) * SZ]
        rho = np.outer(PLUS, PLUS.conj())
        out = ch.apply_channel(ops, rho)
        # 2x2 algebra: off-diagonals pick up (1-p) - p = 0.4
        assert abs(out[0, 1] - rho[0, 1] * 0.4) < 1e-14
        assert abs(out[0, 0] - 0.5) < 1e-14

    def test_incomplete_kraus_rejected(self, rng):
        with pytest.raises(PhysicsError):
            ch.apply_channel([0.9 * np.eye(2, dtype=complex)], random_density(rng, 2))

    def test_output_valid_density(self, rng):
        u = random_unitary(rng, 4)
        ops = [u[:2, :2], u[2:, :2]]  # isometry columns give a valid channel
        rho = random_density(rng, 2)
        out = ch.apply_channel(ops, rho)
        oc.check_density(out)


class TestKrausFromScattering:
    def test_uncoupled_is_identity_channel(self, rng):
        u_env = random_unitary(rng, 3)
        s = np.kron(np.eye(2), u_env)
        rho_env = random_density(rng, 3)
        ops = ch.kraus_from_scattering(s, (2, 3), rho_env)
        rho = random_density(rng, 2)
        out = ch.apply_channel(ops, rho)
        assert np.max(np.abs(out - rho)) < 1e-12

    def test_cnot_environment_control(self):
        # environment controls an X on the system; env in |0> never fires it
        p0 = np.diag([1.0, 0.0]).astype(complex)
        p1 = np.diag([0.0, 1.0]).astype(complex)
        s = np.kron(np.eye(2), p0) + np.kron(SX, p1)
        ops = ch.kraus_from_scattering(s, (2, 2), p0)
        assert len(ops) == 1
        assert np.max(np.abs(ops[0] - np.eye(2))) < 1e-12

    def test_commuting_form_preserves_populations(self, rng):
        # S = sum_n |n><n| x S_n
        s_envs = [random_unitary(rng, 2) for _ in range(2)]
        s = np.zeros((4, 4), dtype=complex)
        for n, s_env in enumerate(s_envs):
            proj = np.zeros((2, 2))
            proj[n, n] = 1.0
            s += np.kron(proj, s_env)
        rho_env = random_density(rng, 2)
        ops = ch.kraus_from_scattering(s, (2, 2), rho_env)
        rho = random_density(rng, 2)
        out = ch.apply_channel(ops, rho)
        assert np.max(np.abs(np.diag(out) - np.diag(rho))) < 1e-12

    def test_matches_direct_partial_trace(self, rng):
        for _ in range(50):
            d_sys, d_env = rng.choice([2, 3]), rng.choice([2, 3])
            s = random_unitary(rng, d_sys * d_env)
            rho_env = random_density(rng, d_env)
            rho = random_density(rng, d_sys)
            ops = ch.kraus_from_scattering(s, (d_sys, d_env), rho_env)
            via_channel = ch.apply_channel(ops, rho)
            direct = oc.partial_trace(
                s @ np.kron(rho, rho_env) @ oc.dag(s), [d_sys, d_env], keep=0)
            assert oc.trace_distance(via_channel, direct) < 1e-10

    def test_choi_positivity(self, rng):
        for d_sys in (2, 3, 4):
            s = random_unitary(rng, d_sys * 2)
            ops = ch.kraus_from_scattering(s, (d_sys, 2), random_density(rng, 2))
            wmin = np.linalg.eigvalsh(ch.choi_matrix(ops)).min()
            assert wmin > -1e-8

    def test_nonunitary_rejected(self, rng):
        with pytest.raises(PhysicsError):
            ch.kraus_from_scattering(np.eye(4) * 0.9, (2, 2), random_density(rng, 2))


class TestScatterCommuting:
    def test_equal_scatterers_do_nothing(self, rng):
        s = random_unitary(rng, 3)
        rho = random_density(rng, 2)
        psi = random_state(rng, 3)
        out = ch.scatter_commuting(rho, np.eye(2), [s, s], psi)
        assert np.max(np.abs(out - rho)) < 1e-12

    def test_phase_flip_kills_coherence(self):
        rho = np.outer(PLUS, PLUS.conj())
        out = ch.scatter_commuting(rho, np.eye(2), [np.eye(2, dtype=complex), SZ], PLUS)
        # <+|sigma_z|+> = 0
        assert abs(out[0, 1]) < 1e-14
        assert abs(out[0, 0] - 0.5) < 1e-14

    def test_populations_exactly_invariant(self, rng):
        rho = random_density(rng, 3)
        s_list = [random_unitary(rng, 4) for _ in range(3)]
        psi = random_state(rng, 4)
        out = ch.scatter_commuting(rho, np.eye(3), s_list, psi)
        assert np.array_equal(np.diag(out), np.diag(rho))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_scatter_overlap_bound(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 2)
    s_list = [random_unitary(rng, 3) for _ in range(2)]
    psi = random_state(rng, 3)
    out = ch.scatter_commuting(rho, np.eye(2), s_list, psi)
    assert abs(out[0, 1]) <= abs(rho[0, 1]) + 1e-12


class TestMeasurement:
    def test_projective_on_plus(self):
        rho = np.outer(PLUS, PLUS.conj())
        p0 = np.diag([1.0, 0.0]).astype(complex)
        assert abs(ch.born_probability(p0, rho) - 0.5) < 1e-14
        post = ch.measure_update([p0, np.diag([0.0, 1.0]).astype(complex)], rho, 0)
        assert np.max(np.abs(post - p0)) < 1e-12

    def test_unsharp_qubit_povm(self):
        eta = 0.5
        effects = [(np.eye(2) + eta * SZ) / 2, (np.eye(2) - eta * SZ) / 2]
        ch.check_povm(effects)
        rho = np.diag([1.0, 0.0]).astype(complex)
        probs = [ch.born_probability(f, rho) for f in effects]
        assert abs(probs[0] - 0.75) < 1e-14
        assert abs(probs[1] - 0.25) < 1e-14

    def test_probabilities_sum_to_one(self, rng):
        # random POVM from a random isometry partition
        u = random_unitary(rng, 6)
        blocks = [u[:2, :3], u[2:4, :3], u[4:, :3]]
        effects = [oc.dag(b) @ b for b in blocks]
        ch.check_povm(effects)
        rho = random_density(rng, 3)
        total = sum(ch.born_probability(f, rho) for f in effects)
        assert abs(total - 1.0) < 1e-12

    def test_zero_probability_outcome_errors(self):
        p0 = np.diag([1.0, 0.0]).astype(complex)
        p1 = np.diag([0.0, 1.0]).astype(complex)
        with pytest.raises(PhysicsError):
            ch.measure_update([p0, p1], p0, 1)

    def test_bayesian_average_is_the_channel(self, rng):
        s = random_unitary(rng, 4)
        rho_probe = random_density(rng, 2)
        p_plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
        p_minus = 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)
        effects, op_sets = ch.indirect_measurement(s, (2, 2), rho_probe, [p_plus, p_minus])
        rho = random_density(rng, 2)
        avg = np.zeros_like(rho)
        for alpha in range(2):
            prob = ch.born_probability(effects[alpha], rho)
            avg += prob * ch.measure_update(op_sets, rho, alpha)
        all_ops = [m for ops in op_sets for m in ops]
        assert oc.trace_distance(avg, ch.apply_channel(all_ops, rho)) < 1e-10


class TestPolarSplit:
    def test_positive_operator_gives_identity_unitary(self):
        m = np.array([[2.0, 0.5], [0.5, 1.0]], dtype=complex)
        u, sqrt_f = ch.polar_split(m)
        assert np.max(np.abs(u - np.eye(2))) < 1e-10
        assert np.max(np.abs(sqrt_f - m)) < 1e-10

    def test_unitary_gives_identity_root(self, rng):
        m = random_unitary(rng, 3)
        u, sqrt_f = ch.polar_split(m)
        assert np.max(np.abs(sqrt_f - np.eye(3))) < 1e-10
        assert np.max(np.abs(u - m)) < 1e-10

    def test_recompose(self):
        m = SX @ np.diag([0.6, 0.8]).astype(complex)
        u, sqrt_f = ch.polar_split(m)
        assert np.max(np.abs(u @ sqrt_f - m)) < 1e-10
        assert np.max(np.abs(sqrt_f @ sqrt_f - oc.dag(m) @ m)) < 1e-10
        assert np.max(np.abs(oc.dag(u) @ u - np.eye(2))) < 1e-10

    def test_rank_deficient_rejected(self):
        with pytest.raises(PhysicsError):
            ch.polar_split(np.diag([1.0, 0.0]).astype(complex))


class TestIndirectMeasurement:
    def test_trivial_coupling_gains_nothing(self, rng):
        rho_probe = random_density(rng, 2)
        p0 = np.diag([1.0, 0.0]).astype(complex)
        p1 = np.diag([0.0, 1.0]).astype(complex)
        effects, _ = ch.indirect_measurement(np.eye(6), (3, 2), rho_probe, [p0, p1])
        for alpha, p in enumerate([p0, p1]):
            weight = np.real(np.trace(p @ rho_probe))
            assert np.max(np.abs(effects[alpha] - weight * np.eye(3))) < 1e-12

    def test_pure_probe_is_efficient(self, rng):
        s = random_unitary(rng, 4)
        probe = np.diag([1.0, 0.0]).astype(complex)
        p0 = np.diag([1.0, 0.0]).astype(complex)
        p1 = np.diag([0.0, 1.0]).astype(complex)
        _, op_sets = ch.indirect_measurement(s, (2, 2), probe, [p0, p1])
        assert all(len(ops) == 1 for ops in op_sets)

    def test_controlled_sz_povm(self):
        # system controls sigma_z on the probe; probe |+> read out in |+/-basis
        p0 = np.diag([1.0, 0.0]).astype(complex)
        p1 = np.diag([0.0, 1.0]).astype(complex)
        s = np.kron(p0, np.eye(2)) + np.kron(p1, SZ)
        probe = np.outer(PLUS, PLUS.conj())
        p_plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
        p_minus = 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)
        effects, op_sets = ch.indirect_measurement(s, (2, 2), probe, [p_plus, p_minus])
        # direct 4x4 oracle: F_+/- = (I +/- sigma_z)/2 on the system
        assert np.max(np.abs(effects[0] - p0)) < 1e-12
        assert np.max(np.abs(effects[1] - p1)) < 1e-12
        for alpha in range(2):
            acc = sum(oc.dag(m) @ m for m in op_sets[alpha])
            assert np.max(np.abs(acc - effects[alpha])) < 1e-12

    def test_consistency_requirement(self, rng):
        s = random_unitary(rng, 6)
        rho_probe = random_density(rng, 3)
        projs = [np.diag([1.0, 0, 0]), np.diag([0, 1.0, 0]), np.diag([0, 0, 1.0])]
        effects, op_sets = ch.indirect_measurement(s, (2, 3), rho_probe, projs)
        assert np.max(np.abs(sum(effects) - np.eye(2))) < 1e-10
        for f, ops in zip(effects, op_sets):
            acc = sum(oc.dag(m) @ m for m in ops)
            assert np.max(np.abs(acc - f)) < 1e-10

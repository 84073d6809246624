import math

import numpy as np
import pytest

import superlind as sl

from lzutil import lz_setup, random_density


def _constant_traj(matrix, t1=10.0, n=201):
    H = sl.TimeDependentHamiltonian.constant(matrix)
    return H, sl.instantaneous_frames(H, np.linspace(0.0, t1, n))


def _naive_rhs(gen, rho, t):
    """Reference superoperator assembled from the explicit operators."""
    ops = gen.ops(t)
    h_tot = gen.hamiltonian(t) + ops.shift
    out = -1j * (h_tot @ rho - rho @ h_tot)
    for L in [ops.dephasing, *ops.jumps.values()]:
        ldl = L.conj().T @ L
        out += L @ rho @ L.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
    return out


class TestLindbladOps:
    def test_diagonal_coupling_frame(self):
        # frame basis diagonalizes sigma_z, so sigma_z coupling produces no
        # jump operators and the dephasing operator is sqrt(gamma(0)) sigma_z
        H, traj = _constant_traj(0.5 * sl.sigma_z)
        spec = sl.ohmic_spectrum(0.1, 5.0, 0.5)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, spec, H)
        ops = gen.ops(1.0)
        assert ops.jumps == {}
        g0 = spec.gamma(0.0)
        assert np.allclose(ops.dephasing, math.sqrt(g0) * sl.sigma_z, atol=1e-12)

    def test_transverse_frame(self):
        # sigma_x eigenframe: sigma_z has no diagonal part, and the
        # de-excitation channel carries rate gamma(gap)
        H, traj = _constant_traj(0.5 * sl.sigma_x)
        spec = sl.ohmic_spectrum(0.1, 5.0, 0.5)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, spec, H)
        ops = gen.ops(2.0)
        assert np.max(np.abs(ops.dephasing)) < 1e-12
        down = ops.jumps[(0, 1)]
        rate = float(np.trace(down.conj().T @ down).real)
        assert rate == pytest.approx(spec.gamma(1.0), rel=1e-12)
        up = ops.jumps[(1, 0)]
        assert float(np.trace(up.conj().T @ up).real) == pytest.approx(
            spec.gamma(-1.0), rel=1e-12
        )

    def test_zero_temperature_kills_upward_jumps(self):
        H, traj = _constant_traj(0.5 * sl.sigma_x)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.ohmic_spectrum(0.1, 5.0, 0.0), H)
        assert set(gen.ops(0.0).jumps) == {(0, 1)}

    def test_jump_rank_one_and_frame_structure(self):
        H, _, times, base, traj = lz_setup(3.0, order=2)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.ohmic_spectrum(0.1, 5.0, 0.5), H)
        ops = gen.ops(1.7)
        k = traj.index_at(1.7)
        U = traj.basis[k]
        deph_f = U.conj().T @ ops.dephasing @ U
        assert np.max(np.abs(deph_f - np.diag(np.diag(deph_f)))) < 1e-12
        for L in ops.jumps.values():
            assert np.linalg.matrix_rank(L, tol=1e-12) == 1

    def test_lamb_shift_diagonal_in_frame(self):
        H, traj = _constant_traj(0.5 * sl.sigma_x)
        spec = sl.ohmic_spectrum(0.1, 5.0, 0.5, shift=lambda w: 0.01 * np.asarray(w))
        gen = sl.LindbladGenerator(traj, sl.sigma_z, spec, H, lamb_shift=True)
        ops = gen.ops(0.0)
        U = traj.basis[0]
        shift_f = U.conj().T @ ops.shift @ U
        assert np.max(np.abs(shift_f - np.diag(np.diag(shift_f)))) < 1e-12
        # sum_a S(w_ab) |<a|A|b>|^2 on the two-level transverse frame
        expected = np.diag([spec.shift(-1.0), spec.shift(1.0)])
        assert np.allclose(shift_f, expected, atol=1e-12)
        off = sl.LindbladGenerator(traj, sl.sigma_z, spec, H, lamb_shift=False)
        assert np.max(np.abs(off.ops(0.0).shift)) == 0.0

    def test_zero_spectrum_disables_dissipator(self):
        H, _, times, base, traj = lz_setup(2.0)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.dephasing_spectrum(0.0), H)
        ops = gen.ops(0.0)
        assert np.max(np.abs(ops.dephasing)) == 0.0
        assert ops.jumps == {}
        rho = random_density(np.random.default_rng(0))
        h0 = gen.hamiltonian(0.0)
        assert np.allclose(gen.rhs(rho, 0.0), -1j * (h0 @ rho - rho @ h0), atol=1e-14)

    def test_time_outside_grid(self):
        H, traj = _constant_traj(0.5 * sl.sigma_x, t1=5.0)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.dephasing_spectrum(0.1), H)
        with pytest.raises(sl.TimeDomainError):
            gen.ops(6.0)

    def test_negative_custom_rate_rejected(self):
        H, traj = _constant_traj(0.5 * sl.sigma_x)
        bad = sl.custom_spectrum(lambda w: np.asarray(w, dtype=float))
        with pytest.raises(sl.ParameterError):
            sl.LindbladGenerator(traj, sl.sigma_z, bad, H)


class TestMasterEquationRHS:
    def test_trace_annihilation_and_hermiticity(self):
        H, _, times, base, traj = lz_setup(3.0, order=1)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.ohmic_spectrum(0.1, 5.0, 0.5), H)
        rng = np.random.default_rng(42)
        for _ in range(100):
            rho = random_density(rng)
            t = rng.uniform(times[0], times[-1])
            out = gen.rhs(rho, t)
            assert abs(complex(np.trace(out))) < 1e-12
            assert np.max(np.abs(out - out.conj().T)) < 1e-12

    def test_matches_explicit_operator_assembly(self):
        H, _, times, base, traj = lz_setup(2.0, order=1)
        spec = sl.ohmic_spectrum(0.08, 5.0, 0.4, shift=lambda w: 0.02 * np.asarray(w))
        gen = sl.LindbladGenerator(traj, sl.sigma_z, spec, H, lamb_shift=True)
        rng = np.random.default_rng(9)
        for _ in range(20):
            rho = random_density(rng)
            t = rng.uniform(times[0], times[-1])
            assert np.max(np.abs(gen.rhs(rho, t) - _naive_rhs(gen, rho, t))) < 1e-12

    def test_frame_gauge_invariance(self):
        rng = np.random.default_rng(4)
        H, _, times, base, _ = lz_setup(2.0)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=2))
        rephased = sl.FrameTrajectory(
            base.times, base.basis * phases[None, None, :], base.energies,
            order=0, hamiltonian=H,
        )
        spec = sl.ohmic_spectrum(0.1, 5.0, 0.5)
        gen_a = sl.LindbladGenerator(base, sl.sigma_z, spec, H)
        gen_b = sl.LindbladGenerator(rephased, sl.sigma_z, spec, H)
        for _ in range(10):
            rho = random_density(rng)
            t = rng.uniform(times[0], times[-1])
            assert np.max(np.abs(gen_a.rhs(rho, t) - gen_b.rhs(rho, t))) < 1e-12

    def test_superadiabatic_ground_state_immune_at_zero_temperature(self):
        # dephasing and the shift act trivially on a basis state, and at
        # temperature zero there is no upward jump out of the ground state
        H, _, times, base, traj = lz_setup(3.0, order=2)
        spec = sl.ohmic_spectrum(0.1, 5.0, 0.0, shift=lambda w: 0.03 * np.asarray(w))
        gen = sl.LindbladGenerator(traj, sl.sigma_z, spec, H, lamb_shift=True)
        for t_probe in (-3.0, 0.0, 2.0):
            k = traj.index_at(t_probe)
            ground = traj.basis[k, :, 0]
            rho = np.outer(ground, ground.conj())
            t = traj.times[k]
            h_tot = gen.hamiltonian(t) + gen.ops(t).shift
            unitary_only = -1j * (h_tot @ rho - rho @ h_tot)
            assert np.max(np.abs(gen.rhs(rho, t) - unitary_only)) < 1e-13

    def test_uniform_diagonal_coupling_is_silent(self):
        # identity coupling gives L0 proportional to the identity: no effect
        H, traj = _constant_traj(0.5 * sl.sigma_x)
        gen = sl.LindbladGenerator(traj, np.eye(2, dtype=complex),
                                   sl.dephasing_spectrum(0.2), H)
        rng = np.random.default_rng(1)
        for _ in range(5):
            rho = random_density(rng)
            h0 = gen.hamiltonian(0.0)
            assert np.allclose(gen.rhs(rho, 0.0), -1j * (h0 @ rho - rho @ h0), atol=1e-13)

    def test_thermal_state_is_fixed_point_under_detailed_balance(self):
        beta = 2.0  # T = 0.5
        H, traj = _constant_traj(0.5 * sl.sigma_x)
        spec = sl.ohmic_spectrum(0.1, 5.0, 1.0 / beta, symmetric_cutoff=True)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, spec, H)
        # e^{-beta H} for H = sigma_x / 2, normalized
        thermal = np.cosh(beta / 2) * np.eye(2) - np.sinh(beta / 2) * np.array(
            [[0.0, 1.0], [1.0, 0.0]]
        )
        thermal = (thermal / np.trace(thermal)).astype(complex)
        assert np.max(np.abs(gen.rhs(thermal, 5.0))) < 1e-12

    def test_non_hermitian_input_rejected(self):
        H, traj = _constant_traj(0.5 * sl.sigma_x)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.dephasing_spectrum(0.1), H)
        bad = np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex)
        with pytest.raises(sl.StateIntegrityError):
            gen.rhs(bad, 0.0)

    def test_module_level_wrappers(self):
        H, traj = _constant_traj(0.5 * sl.sigma_x)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.dephasing_spectrum(0.1), H)
        rho = random_density(np.random.default_rng(2))
        assert np.allclose(sl.me_rhs(gen, rho, 1.0), gen.rhs(rho, 1.0))
        assert np.allclose(sl.lindblad_ops(gen, 1.0).dephasing, gen.ops(1.0).dephasing)


class TestInstantaneousMode:
    def test_demotes_frames_to_order_zero(self):
        H, _, times, base, traj = lz_setup(3.0, order=4)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.dephasing_spectrum(0.1), H)
        inst = sl.instantaneous_mode(gen)
        assert inst.frames.order == 0
        assert np.max(np.abs(inst.frames.basis - base.basis)) < 1e-12
        assert sl.instantaneous_mode(inst) is inst

    def test_equivalent_for_constant_hamiltonian(self):
        H, traj0 = _constant_traj(0.5 * sl.sigma_x)
        times = traj0.times
        traj2 = sl.superadiabatic_frames(H, 2, times, base=traj0)
        spec = sl.ohmic_spectrum(0.1, 5.0, 0.5)
        gen = sl.LindbladGenerator(traj2, sl.sigma_z, spec, H)
        inst = gen.instantaneous()
        rng = np.random.default_rng(8)
        for _ in range(5):
            rho = random_density(rng)
            assert np.max(np.abs(gen.rhs(rho, 3.0) - inst.rhs(rho, 3.0))) < 1e-10


def test_effective_hamiltonian_matches_ops():
    H, _, times, base, traj = lz_setup(2.0, order=1)
    spec = sl.ohmic_spectrum(0.1, 5.0, 0.5, shift=lambda w: 0.01 * np.asarray(w))
    gen = sl.LindbladGenerator(traj, sl.sigma_z, spec, H, lamb_shift=True)
    for t in (-4.0, 0.0, 3.3):
        ops = gen.ops(t)
        total = sum(
            (L.conj().T @ L for L in ops.jumps.values()),
            ops.dephasing.conj().T @ ops.dephasing,
        )
        expected = gen.hamiltonian(t) + ops.shift - 0.5j * total
        assert np.max(np.abs(gen.effective_hamiltonian(t) - expected)) < 1e-12

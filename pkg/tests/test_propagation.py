import math

import numpy as np
import pytest

import superlind as sl

from lzutil import excited_population, excited_state, lz_setup


class TestEvolveUnitary:
    def test_rabi_half_period(self):
        # H = (delta/2) sigma_x for a time pi/delta maps (1,0) to (0,-i)
        H = sl.TimeDependentHamiltonian.constant(0.5 * sl.sigma_x)
        res = sl.evolve_unitary(H, np.array([1.0, 0.0], complex), 0.0, math.pi)
        target = np.array([0.0, -1.0j])
        assert abs(np.vdot(target, res.state)) == pytest.approx(1.0, abs=1e-9)

    def test_zero_hamiltonian_is_identity(self):
        H = sl.TimeDependentHamiltonian(2, lambda t: np.zeros((2, 2), complex))
        psi0 = np.array([0.6, 0.8j])
        res = sl.evolve_unitary(H, psi0, 0.0, 7.0)
        assert np.max(np.abs(res.state - psi0)) < 1e-12

    def test_closed_lz_transition_probability(self):
        H, t_final, _, base, _ = lz_setup(3.0)
        res = sl.evolve_unitary(H, base.basis[0, :, 0], -t_final, t_final)
        p = excited_population(res.state, excited_state(H, t_final))
        assert p == pytest.approx(math.exp(-1.5 * math.pi), rel=0.01)

    def test_norm_unity_along_samples(self):
        H, t_final, times, base, _ = lz_setup(2.0)
        res = sl.evolve_unitary(H, base.basis[0, :, 0], -t_final, t_final,
                                sample_times=times[:: len(times) // 20])
        norms = np.linalg.norm(res.samples, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-10
        assert np.allclose(res.samples[0], base.basis[0, :, 0])

    def test_unnormalized_input_rejected(self):
        H = sl.TimeDependentHamiltonian.constant(0.5 * sl.sigma_x)
        with pytest.raises(sl.StateIntegrityError):
            sl.evolve_unitary(H, np.array([1.0, 1.0], complex), 0.0, 1.0)

    def test_rk4_fourth_order_convergence(self):
        H = sl.lz_hamiltonian(sl.LZParams(v=0.5, delta=1.0))
        psi0 = np.array([0.0, 1.0], complex)
        ref = sl.evolve_unitary(
            H, psi0, -4.0, 4.0, cfg=sl.IntegratorConfig(rtol=1e-12, atol=1e-13)
        ).state
        errs = []
        for step in (0.05, 0.025):
            res = sl.evolve_unitary(
                H, psi0, -4.0, 4.0,
                cfg=sl.IntegratorConfig(method="rk4", max_step=step),
            )
            errs.append(np.max(np.abs(res.state - ref)))
        ratio = errs[0] / errs[1]
        assert 8.0 < ratio < 30.0

    def test_stiff_problem_raises(self):
        H = sl.TimeDependentHamiltonian(
            2, lambda t: (1.0 / (1.0 - t)) * np.asarray(sl.sigma_z)
        )
        with pytest.raises(sl.StiffnessError):
            sl.evolve_unitary(H, np.array([1.0, 0.0], complex), 0.0, 1.0)


class TestEvolveLindblad:
    def test_closed_limit_matches_unitary(self):
        H, t_final, _, base, _ = lz_setup(2.0)
        gen = sl.LindbladGenerator(base, sl.sigma_z, sl.dephasing_spectrum(0.0), H)
        psi0 = base.basis[0, :, 0]
        uni = sl.evolve_unitary(H, psi0, -t_final, t_final)
        lind = sl.evolve_lindblad(gen, np.outer(psi0, psi0.conj()), -t_final, t_final)
        diff = np.max(np.abs(lind.state - np.outer(uni.state, uni.state.conj())))
        assert diff < 5e-6

    def test_frozen_frame_relaxation_rate(self):
        # static transverse Hamiltonian, zero-temperature bath: the excited
        # population decays exponentially at rate gamma(gap)
        H = sl.TimeDependentHamiltonian.constant(0.5 * sl.sigma_x)
        times = np.linspace(0.0, 30.0, 301)
        traj = sl.instantaneous_frames(H, times)
        spec = sl.ohmic_spectrum(0.1, 5.0, 0.0)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, spec, H)
        exc = traj.basis[0, :, 1]
        res = sl.evolve_lindblad(
            gen, np.outer(exc, exc.conj()), 0.0, 30.0,
            sample_times=np.array([10.0, 20.0, 30.0]),
        )
        rate = spec.gamma(1.0)
        for t, rho in zip((10.0, 20.0, 30.0), res.samples):
            pe = float(np.real(exc.conj() @ rho @ exc))
            assert pe == pytest.approx(math.exp(-rate * t), abs=1e-6)

    def test_integrity_diagnostics(self):
        H, t_final, _, base, traj = lz_setup(2.0, order=2)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.ohmic_spectrum(0.1, 5.0, 0.5), H)
        psi0 = traj.basis[0, :, 0]
        res = sl.evolve_lindblad(gen, np.outer(psi0, psi0.conj()), -t_final, t_final)
        d = res.diagnostics
        assert d.max_trace_drift < 1e-8
        assert d.max_hermiticity_drift < 1e-10
        assert d.min_eigenvalue >= -1e-7
        assert d.n_steps > 0

    def test_positivity_violation_detected(self):
        # a drift that is not of Lindblad form pumps coherence without bound
        H = sl.TimeDependentHamiltonian.constant(0.5 * sl.sigma_z)
        times = np.linspace(0.0, 50.0, 501)
        traj = sl.instantaneous_frames(H, times)

        class BrokenGenerator:
            frames = traj

            def rhs(self, rho, t):
                return 0.2 * np.asarray(sl.sigma_x)

        rho0 = np.diag([0.5, 0.5]).astype(complex)
        with pytest.raises(sl.PositivityError):
            sl.evolve_lindblad(BrokenGenerator(), rho0, 0.0, 50.0)

    def test_invalid_initial_state_rejected(self):
        H, _, _, base, _ = lz_setup(2.0)
        gen = sl.LindbladGenerator(base, sl.sigma_z, sl.dephasing_spectrum(0.0), H)
        with pytest.raises(sl.StateIntegrityError):
            sl.evolve_lindblad(gen, np.diag([0.9, 0.9]).astype(complex), -1.0, 1.0)


class TestEvolveTrajectories:
    def test_no_bath_matches_unitary_for_any_ensemble(self):
        H, t_final, _, base, _ = lz_setup(2.0)
        gen = sl.LindbladGenerator(base, sl.sigma_z, sl.dephasing_spectrum(0.0), H)
        psi0 = base.basis[0, :, 0]
        res = sl.evolve_trajectories(
            gen, psi0, -t_final, t_final, sl.TrajectoryConfig(n_traj=3, seed=5)
        )
        uni = sl.evolve_unitary(H, psi0, -t_final, t_final)
        assert all(len(j) == 0 for j in res.jumps)
        rho_uni = np.outer(uni.state, uni.state.conj())
        # the fixed-step drift accumulates a small phase at the window edges
        # (eigenfrequencies ~ v t_final / 2); populations are much tighter
        assert np.max(np.abs(res.state - rho_uni)) < 5e-3
        excited = excited_state(H, t_final)
        assert abs(
            excited_population(res.state, excited)
            - excited_population(rho_uni, excited)
        ) < 1e-4

    def test_seed_reproducibility(self):
        H, t_final, _, base, _ = lz_setup(2.0)
        gen = sl.LindbladGenerator(base, sl.sigma_z, sl.ohmic_spectrum(0.1, 5.0, 0.5), H)
        psi0 = base.basis[0, :, 0]
        a = sl.evolve_trajectories(gen, psi0, -t_final, t_final,
                                   sl.TrajectoryConfig(n_traj=20, seed=7))
        b = sl.evolve_trajectories(gen, psi0, -t_final, t_final,
                                   sl.TrajectoryConfig(n_traj=20, seed=7))
        c = sl.evolve_trajectories(gen, psi0, -t_final, t_final,
                                   sl.TrajectoryConfig(n_traj=20, seed=8))
        assert np.array_equal(a.state, b.state)
        assert [[e.time for e in traj] for traj in a.jumps] == [
            [e.time for e in traj] for traj in b.jumps
        ]
        assert not np.array_equal(a.state, c.state)

    def test_jump_records_correlate_with_excitation(self):
        # dephasing jumps in the instantaneous basis kick the state off the
        # adiabatic path; averaging over jump times leaves the ensemble far
        # more excited than the jump-free closed evolution
        H, t_final, _, base, _ = lz_setup(4.0)
        gen = sl.LindbladGenerator(base, sl.sigma_z, sl.dephasing_spectrum(0.1), H)
        psi0 = base.basis[0, :, 0]
        excited = excited_state(H, t_final)
        res = sl.evolve_trajectories(
            gen, psi0, -t_final, t_final, sl.TrajectoryConfig(n_traj=150, seed=17)
        )
        assert all(len(j) > 0 for j in res.jumps)
        p_mc = excited_population(res.state, excited)
        closed = sl.evolve_unitary(H, psi0, -t_final, t_final)
        p_closed = excited_population(closed.state, excited)
        assert p_mc > 2.0 * p_closed

    def test_record_flag_off(self):
        H, t_final, _, base, _ = lz_setup(2.0)
        gen = sl.LindbladGenerator(base, sl.sigma_z, sl.dephasing_spectrum(0.05), H)
        res = sl.evolve_trajectories(
            gen, base.basis[0, :, 0], -t_final, t_final,
            sl.TrajectoryConfig(n_traj=4, seed=1, record_jumps=False),
        )
        assert res.jumps is None

    def test_jump_event_fields(self):
        H = sl.TimeDependentHamiltonian.constant(0.5 * sl.sigma_x)
        times = np.linspace(0.0, 80.0, 801)
        traj = sl.instantaneous_frames(H, times)
        gen = sl.LindbladGenerator(traj, sl.sigma_z, sl.ohmic_spectrum(0.2, 5.0, 0.0), H)
        exc = traj.basis[0, :, 1]
        res = sl.evolve_trajectories(gen, exc, 0.0, 80.0,
                                     sl.TrajectoryConfig(n_traj=8, seed=3))
        events = [e for traj_events in res.jumps for e in traj_events]
        assert events, "zero-temperature decay must produce jumps"
        assert all(0.0 < e.time < 80.0 for e in events)
        # only the de-excitation channel exists at zero temperature
        assert {(e.target, e.source) for e in events} == {(0, 1)}


class TestBlochVector:
    def test_poles_and_center(self):
        assert sl.bloch_vector(np.diag([1.0, 0.0]).astype(complex)) == (0.0, 0.0, 1.0)
        assert sl.bloch_vector(0.5 * np.eye(2, dtype=complex)) == (0.0, 0.0, 0.0)

    def test_pure_states_on_sphere(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            psi = rng.normal(size=2) + 1j * rng.normal(size=2)
            psi /= np.linalg.norm(psi)
            x, y, z = sl.bloch_vector(np.outer(psi, psi.conj()))
            assert x * x + y * y + z * z == pytest.approx(1.0, abs=1e-12)

    def test_dimension_error(self):
        with pytest.raises(sl.DimensionError):
            sl.bloch_vector(np.eye(3, dtype=complex) / 3.0)


class TestConfigsAndValidators:
    def test_integrator_config_validation(self):
        with pytest.raises(sl.ParameterError):
            sl.IntegratorConfig(method="euler")
        with pytest.raises(sl.ParameterError):
            sl.IntegratorConfig(rtol=0.0)
        with pytest.raises(sl.ParameterError):
            sl.IntegratorConfig(max_step=-1.0)

    def test_trajectory_config_validation(self):
        with pytest.raises(sl.ParameterError):
            sl.TrajectoryConfig(n_traj=0)

    def test_density_matrix_validator(self):
        with pytest.raises(sl.StateIntegrityError):
            sl.check_density_matrix(np.array([[0.5, 0.3], [0.1, 0.5]], complex))
        with pytest.raises(sl.StateIntegrityError):
            sl.check_density_matrix(np.array([[1.2, 0.0], [0.0, -0.2]], complex))
        ok = sl.check_density_matrix(np.diag([0.25, 0.75]).astype(complex))
        assert np.allclose(ok, np.diag([0.25, 0.75]))


def test_time_series_writers(tmp_path):
    H = sl.TimeDependentHamiltonian.constant(0.5 * sl.sigma_x)
    psi0 = np.array([1.0, 0.0], complex)
    times = np.linspace(0.0, 2.0, 5)
    res = sl.evolve_unitary(H, psi0, 0.0, 2.0, sample_times=times)
    rhos = [np.outer(s, s.conj()) for s in res.samples]
    bpath = tmp_path / "bloch.csv"
    sl.write_bloch_csv(bpath, times, rhos, header_lines=["case = rabi"])
    lines = [ln for ln in bpath.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "t,x,y,z"
    assert len(lines) == 1 + len(times)
    dpath = tmp_path / "rho.csv"
    sl.write_density_csv(dpath, times, rhos)
    header = [ln for ln in dpath.read_text().splitlines() if not ln.startswith("#")][0]
    assert header.split(",")[:3] == ["t", "re_00", "im_00"]

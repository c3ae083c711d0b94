import math

import numpy as np
import pytest
from scipy.linalg import expm

import cavspin.dicke as dicke_mod
from cavspin.dicke import (DickePropagator, DickeState, EffectiveCoeffs,
                           _dense_hamiltonian, dicke_evolve, dicke_moments,
                           dicke_xi2, dicke_xi2_trace, effective_coeffs,
                           oat_min_squeezing, oat_moments, stretched_state)
from cavspin.moments import squeezing_parameter
from cavspin.params import PhysicalParams, demo_params, match_raman


def matched_params(n_atoms=100, omega1=10.0):
    p = PhysicalParams(n_atoms=n_atoms, omega_1=omega1, omega_2=0.0,
                       delta_1=2000.0, omega_ab=300.0, delta=4.0)
    return p.with_drives(p.omega_1, match_raman(p))


class TestEffectiveCoeffs:
    def test_matched_drive_collapses_to_twisting(self):
        p = matched_params()
        co = effective_coeffs(p)
        chi = abs(p.omega_1 * p.g_b / p.delta_1) ** 2 / p.delta
        for c in (co.c_pm, co.c_mp, co.c_pp, co.c_mm):
            assert complex(c) == pytest.approx(chi / 4.0, rel=1e-12)
        assert co.matched_chi() == pytest.approx(chi, rel=1e-12)

    def test_single_drive_keeps_only_dispersive_term(self):
        p = PhysicalParams(n_atoms=10, omega_1=3.0, omega_2=0.0, delta_1=50.0,
                           omega_ab=5.0, delta=2.0)
        co = effective_coeffs(p)
        assert co.c_pp == 0 and co.c_mm == 0 and co.c_mp == 0
        assert co.c_pm == pytest.approx(9.0 / (4 * 2500 * 2.0), rel=1e-12)

    def test_demo_coefficients(self):
        p = demo_params()
        co = effective_coeffs(p)
        assert co.c_pm == pytest.approx(1e8 / (4 * 1e10 * 500), rel=1e-12)
        assert co.c_mp == pytest.approx(1e8 / (4 * 1.1e5 ** 2 * 500), rel=1e-12)
        assert complex(co.c_pp) == pytest.approx(1e8 / (4 * 1e5 * 1.1e5 * 500),
                                                 rel=1e-12)

    def test_zero_cavity_detuning_refused(self):
        p = PhysicalParams(n_atoms=2, omega_1=1.0, omega_2=1.0, delta_1=10.0,
                           omega_ab=1.0, delta=0.0)
        with pytest.raises(ValueError):
            effective_coeffs(p)

    def test_hermiticity_enforced(self):
        with pytest.raises(ValueError):
            EffectiveCoeffs(c_pm=1.0, c_mp=1.0, c_pp=1.0, c_mm=2.0)
        with pytest.raises(ValueError):
            EffectiveCoeffs(c_pm=1j, c_mp=1.0, c_pp=0.0, c_mm=0.0)


class TestDickeEvolve:
    def test_time_zero(self):
        co = EffectiveCoeffs(0.1, 0.1, 0.1, 0.1)
        state = dicke_evolve(co, 6, 0.0)
        assert state.amplitudes == pytest.approx(stretched_state(6).amplitudes)

    def test_two_atom_pair_oscillation(self):
        # H = chi Jx^2 on |m=+1>: P(m=-1) = sin^2(chi t / 2), m=0 stays empty
        chi = 0.8
        co = EffectiveCoeffs(chi / 4, chi / 4, chi / 4, chi / 4)
        for t in (0.3, 1.1, 2.9):
            amps = dicke_evolve(co, 2, t).amplitudes
            assert abs(amps[0]) ** 2 == pytest.approx(math.sin(chi * t / 2) ** 2,
                                                      abs=1e-12)
            assert abs(amps[1]) ** 2 == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 9, 40])
    def test_against_dense_matrix_exponential(self, n):
        co = EffectiveCoeffs(0.013, 0.008, complex(0.004, 0.003),
                             complex(0.004, -0.003))
        t = 3.7
        direct = expm(-1j * t * _dense_hamiltonian(co, n)) @ \
            stretched_state(n).amplitudes
        state = dicke_evolve(co, n, t)
        assert np.abs(state.amplitudes - direct).max() < 1e-10

    def test_unitarity_long_run(self):
        co = EffectiveCoeffs(0.02, 0.01, complex(0.005, 0.001),
                             complex(0.005, -0.001))
        prop = DickePropagator(co, 60)
        amps = prop.evolve_amplitudes(stretched_state(60).amplitudes, [1e3])[0]
        assert abs(np.linalg.norm(amps) - 1.0) < 1e-9

    def test_krylov_path_matches_eig_path(self, monkeypatch):
        co = EffectiveCoeffs(0.01, 0.02, complex(0.005, -0.002),
                             complex(0.005, 0.002))
        reference = dicke_evolve(co, 30, 5.0).amplitudes
        monkeypatch.setattr(dicke_mod, "_DENSE_EIG_LIMIT", 10)
        sparse_path = dicke_evolve(co, 30, 5.0).amplitudes
        assert np.abs(sparse_path - reference).max() < 1e-9

    def test_refuses_oversized_systems(self):
        with pytest.raises(ValueError):
            dicke_evolve(EffectiveCoeffs(0.1, 0.1, 0.1, 0.1), 10 ** 4 + 1, 1.0)

    def test_state_normalization_checked(self):
        with pytest.raises(ValueError):
            DickeState(3, np.array([1.0, 1.0, 0.0, 0.0], dtype=complex))


class TestDickeMoments:
    @pytest.mark.parametrize("n", [1, 2, 25])
    def test_stretched_state(self, n):
        m = dicke_moments(stretched_state(n))
        assert m.as_array() == pytest.approx(
            np.array([n / 2, n, 0, 0, n, 0], dtype=complex))

    def test_two_atom_edge_superposition(self):
        # (|m=+1> + |m=-1>)/sqrt(2): three-level ladder algebra gives
        # <J+J+> = <1|J+J+|-1>/2 = 1 and <J+J-> = <J-J+> = 1
        amps = np.array([1.0, 0.0, 1.0], dtype=complex) / math.sqrt(2.0)
        m = dicke_moments(DickeState(2, amps))
        assert m.jz == pytest.approx(0.0)
        assert m.jpp == pytest.approx(1.0)
        assert m.jpm + m.jmp == pytest.approx(2.0)

    def test_adjointness(self):
        rng = np.random.default_rng(5)
        amps = rng.normal(size=9) + 1j * rng.normal(size=9)
        amps /= np.linalg.norm(amps)
        m = dicke_moments(DickeState(8, amps))
        assert m.jmm == pytest.approx(np.conj(m.jpp), rel=1e-14)

    def test_xi2_matches_direct_angle_minimization(self):
        co = effective_coeffs(matched_params(n_atoms=40))
        chi = co.matched_chi()
        state = dicke_evolve(co, 40, 0.3 / (40 * chi) * 40 ** (1 / 3))
        xi2, _ = dicke_xi2(state)
        m = dicke_moments(state)
        thetas = np.linspace(0, np.pi, 40001, endpoint=False)
        var = ((m.jpm.real + m.jmp.real) / 4.0
               + 0.5 * np.real(m.jpp * np.exp(-2j * thetas)))
        direct = 40 * var.min() / m.jz.real ** 2
        assert xi2 == pytest.approx(direct, rel=1e-8)


class TestTwisting:
    @pytest.mark.parametrize("n", [2, 7, 24])
    def test_closed_form_matches_ladder_evolution(self, n):
        c = 0.003
        co = EffectiveCoeffs(c, c, c, c)
        for t in (0.5, 4.0, 11.0):
            via_ladder = dicke_moments(dicke_evolve(co, n, t)).as_array()
            closed = oat_moments(n, 4 * c * t)[0]
            assert np.abs(via_ladder - closed).max() < 1e-11 * max(1.0, n * n / 4)

    def test_two_atoms_exact_half(self):
        xi2, t_min = oat_min_squeezing(2)
        assert xi2 == pytest.approx(0.5, abs=1e-4)
        assert t_min == pytest.approx(math.pi / 2, rel=5e-2)

    @pytest.mark.parametrize("n", [100, 1000, 10000])
    def test_scaling_band(self, n):
        xi2, _ = oat_min_squeezing(n)
        assert 0.5 <= xi2 * n ** (2.0 / 3.0) <= 2.0

    def test_monotone_improvement(self):
        assert oat_min_squeezing(1000)[0] < oat_min_squeezing(100)[0]

    def test_size_limits(self):
        with pytest.raises(ValueError):
            oat_min_squeezing(1)
        with pytest.raises(ValueError):
            oat_min_squeezing(10 ** 4 + 1)

    def test_moments_feed_shared_squeezing_formula(self):
        n = 200
        mom = oat_moments(n, 0.02)[0]
        from cavspin.moments import MomentState
        xi2, theta = squeezing_parameter(MomentState.from_array(mom), n)
        assert 0.0 < xi2 < 1.0
        assert 0.0 <= theta < np.pi


def _linear_vs_exact(n_atoms):
    from scipy.linalg import expm
    from cavspin.moments import assemble_generator, default_t_max, evolve_squeezing, \
        initial_state
    p = matched_params(n_atoms=n_atoms, omega1=10.0)
    trace = evolve_squeezing(p)
    co = effective_coeffs(p)
    gen = assemble_generator(p)
    v0 = initial_state(n_atoms).as_array()
    prop = DickePropagator(co, n_atoms)
    times = np.linspace(trace.t_min / 8.0, trace.t_min, 8)
    amps = prop.evolve_amplitudes(stretched_state(n_atoms).amplitudes, times)
    dev_jz = dev_jpp = 0.0
    for t, vec in zip(times, amps):
        exact = dicke_moments(DickeState(n_atoms, vec / np.linalg.norm(vec)))
        lin = expm(gen.m * t) @ v0
        dev_jz = max(dev_jz, abs(lin[0].real - exact.jz) / abs(exact.jz))
        dev_jpp = max(dev_jpp, abs(lin[2] - exact.jpp) / abs(exact.jpp))
    wide = np.linspace(1e-9, 2.5 * trace.times[-1], 300)
    exact_min = dicke_xi2_trace(co, n_atoms, wide).min()
    min_dev = abs(trace.min_xi2 - exact_min) / exact_min
    return dev_jz, dev_jpp, min_dev


class TestMomentEquationCrossOracle:
    """Linearized moment dynamics against the exact ladder evolution.

    The thousand-atom case sits inside the documented accuracy bands; at a
    hundred atoms the Jz ~ N/2 linearization error is an order-one effect on
    this horizon (measured: jpp trajectory ~2x off, minimum ~80% off), so the
    same bands are asserted as a strict expected failure there.
    """

    def test_thousand_atoms_within_bands(self):
        dev_jz, dev_jpp, min_dev = _linear_vs_exact(1000)
        assert dev_jz <= 0.05
        assert dev_jpp <= 0.25
        assert min_dev <= 0.25

    @pytest.mark.xfail(
        strict=True,
        reason="Jz ~ N/2 linearization is an O(1) error at N = 100 on the "
               "squeezing-minimum horizon")
    def test_hundred_atoms_literal_bands(self):
        dev_jz, dev_jpp, min_dev = _linear_vs_exact(100)
        assert dev_jz <= 0.05
        assert dev_jpp <= 0.25
        assert min_dev <= 0.25


class TestIdealTrace:
    def test_export_format_and_exact_commutator(self):
        from cavspin.dicke import ideal_trace
        from cavspin.moments import trace_csv_rows
        co = effective_coeffs(matched_params(n_atoms=30))
        chi = co.matched_chi()
        times = np.linspace(0.0, 0.5 / (30 * chi), 20)
        trace = ideal_trace(co, 30, times)
        rows = list(trace_csv_rows(trace))
        assert rows[0].startswith("t,xi2,theta_min,")
        assert len(rows) == 21
        assert trace.xi2[0] == pytest.approx(1.0, abs=1e-12)
        # exact evolution preserves the ladder commutator identity
        assert np.abs(trace.commutator_residual).max() < 1e-9 * 30

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_density
from qutrit_correlations.correlations import make_isotropic
from qutrit_correlations.nv import (
    TRANSITIONS,
    Axis,
    Channel,
    NvConfig,
    PrepStep,
    PulseSpec,
    apply_pulses,
    dephase,
    dephasing_mask,
    diagonal_state,
    expected_step1,
    expected_step2,
    hamiltonian,
    initial_state,
    level,
    pi_pulse,
    prepare_isotropic,
    prepare_with_nuclear_leakage,
    preparation_steps,
    pulse_unitary,
    sequence_unitary,
    transition_frequencies,
)
from qutrit_correlations.qudit import fidelity

P_GRID = [0.0, 0.25, 0.5, 0.94, 1.0]
# fidelity of the ideal state to its p_n = 0.981 counterpart at p = 0.5
LEAKAGE_FIDELITY_HALF = 0.999719583132


def printed_isotropic(p):
    m = np.diag([(1 + 2 * p) / 9 if k in (0, 4, 8) else (1 - p) / 9 for k in range(9)])
    for i, j in ((0, 4), (0, 8), (4, 8)):
        m[i, j] = m[j, i] = p / 3
    return m


class TestLevels:
    def test_ordering(self):
        assert [level(s, i) for s in (1, 0, -1) for i in (1, 0, -1)] == list(range(1, 10))

    def test_invalid(self):
        with pytest.raises(ValueError):
            level(2, 0)


class TestConfig:
    def test_defaults_follow_experiment(self):
        cfg = NvConfig()
        assert (cfg.rabi_mw, cfg.rabi_rf, cfg.t_wait, cfg.p_n) == (0.2e6, 25e3, 90e-6, 0.981)

    def test_validation(self):
        with pytest.raises(ValueError, match="p_e"):
            NvConfig(p_e=1.2)
        with pytest.raises(ValueError, match="T2e_star"):
            NvConfig(T2e_star=0)
        with pytest.raises(ValueError, match="dephasing"):
            NvConfig(dephasing="lorentzian")

    def test_dict_round_trip(self, tmp_path):
        cfg = NvConfig(p_e=0.8, dephasing="exponential")
        d = cfg.to_dict()
        assert d["T2n_star"] is None
        assert NvConfig.from_dict(json.loads(json.dumps(d))) == cfg
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"nv": {"p_e": 0.7}}))
        assert NvConfig.from_file(path).p_e == 0.7

    def test_unknown_field(self):
        with pytest.raises(ValueError, match="unknown"):
            NvConfig.from_dict({"bogus": 1})


class TestHamiltonian:
    def test_diagonal_energies(self):
        cfg = NvConfig()
        e = np.real(np.diag(hamiltonian(cfg))) / (2 * np.pi)
        assert e[level(0, 0) - 1] == 0.0
        assert e[level(1, 1) - 1] == pytest.approx(cfg.D + cfg.omega_e + cfg.Q + cfg.omega_n + cfg.A)

    def test_transition_scales(self):
        f = transition_frequencies(NvConfig())
        for k, v in f.items():
            if k.startswith("omega_e"):
                assert 1e9 < v < 5e9
            else:
                assert 1e6 < v < 1e7
        assert len(set(np.round(list(f.values()), 3))) == len(f)


class TestPulses:
    def test_spec_validation(self):
        with pytest.raises(ValueError, match="single ladder step"):
            PulseSpec((1, 5), math.pi)
        with pytest.raises(ValueError, match="needs channel"):
            PulseSpec((4, 5), math.pi, channel=Channel.MW)
        assert PulseSpec((4, 7), 1.0).channel is Channel.MW
        assert PulseSpec((5, 6), 1.0).channel is Channel.RF

    def test_transitions_are_single_steps(self):
        for m, n in TRANSITIONS.values():
            PulseSpec((m, n), 1.0)

    @given(st.sampled_from(list(TRANSITIONS.values())), st.floats(-7, 7), st.sampled_from(list(Axis)))
    def test_unitary_and_orientation(self, pair, angle, axis):
        u = pulse_unitary(PulseSpec(pair, angle, axis))
        np.testing.assert_allclose(u @ u.conj().T, np.eye(9), atol=1e-13)
        v = pulse_unitary(PulseSpec(pair[::-1], angle, axis))
        if axis is Axis.X:
            np.testing.assert_allclose(u, v, atol=1e-15)
        else:
            np.testing.assert_allclose(u, v.conj().T, atol=1e-15)

    def test_pi_pulse_swaps_populations(self):
        rho = diagonal_state(np.eye(9)[3])
        out = apply_pulses(rho, [pi_pulse(1, 4)])
        assert out.matrix[0, 0].real == pytest.approx(1.0)

    def test_sequence_order(self):
        a, b = pi_pulse(1, 4), PulseSpec((4, 5), 0.7, Axis.Y)
        np.testing.assert_allclose(sequence_unitary([a, b]), pulse_unitary(b) @ pulse_unitary(a))


class TestDephasing:
    def test_mask_structure(self):
        cfg = NvConfig(T2n_star=50e-6)
        m = dephasing_mask(30e-6, cfg)
        assert np.all(np.diag(m) == 1.0)
        fe, fn = math.exp(-(30 / 18) ** 2), math.exp(-(30 / 50) ** 2)
        assert m[0, 3] == pytest.approx(fe)  # differs in m_S only
        assert m[0, 1] == pytest.approx(fn)  # differs in m_I only
        assert m[0, 4] == pytest.approx(fe * fn)
        np.testing.assert_array_equal(dephasing_mask(0.0, cfg), np.ones((9, 9)))

    def test_exponential_law(self):
        m = dephasing_mask(18e-6, NvConfig(dephasing="exponential"))
        assert m[0, 3] == pytest.approx(math.exp(-1))

    def test_negative_time(self):
        with pytest.raises(ValueError):
            dephasing_mask(-1.0, NvConfig())

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0, 1e-3), st.floats(1e-6, 1e-3))
    def test_preserves_physicality_and_populations(self, seed, t, t2n):
        rho = random_density(np.random.default_rng(seed))
        out = dephase(rho, t, NvConfig(T2n_star=t2n))
        np.testing.assert_allclose(np.diag(out.matrix), np.diag(rho.matrix), atol=1e-15)
        assert out.eigenvalues.min() > -1e-12


class TestInitialState:
    def test_perfect_nucleus(self):
        cfg = NvConfig(p_e=0.8, p_n=1.0)
        np.testing.assert_allclose(np.diag(initial_state(cfg).matrix).real,
                                   [0.1, 0, 0, 0.8, 0, 0, 0.1, 0, 0])

    def test_leakage_into_m_i_zero(self):
        w = np.diag(initial_state(NvConfig(p_e=1.0, p_n=0.9)).matrix).real
        assert w[3] == pytest.approx(0.9) and w[4] == pytest.approx(0.1)


class TestPreparation:
    def test_angles(self):
        s1, s2, s3 = preparation_steps(0.5, 90e-6)
        assert s1.pulses[0].angle == pytest.approx(2 * math.asin(math.sqrt(2.5 / 3)))
        assert s2.pulses[2].angle == pytest.approx(2 * math.asin(math.sqrt(0.5 / 6)))
        assert s2.pulses[3].angle == pytest.approx(2 * math.asin(math.sqrt(0.5 / 5.5)))
        assert all(p.axis is Axis.Y for p in s3.pulses)
        assert s3.wait_after == 0.0

    def test_step_requires_content(self):
        with pytest.raises(ValueError):
            PrepStep(())

    @pytest.mark.parametrize("p", P_GRID)
    def test_step_one_pure_state(self, p):
        # before the wait the state is |psi_2>, with step-I populations
        step = preparation_steps(p, 90e-6)[0]
        out = apply_pulses(initial_state(NvConfig().ideal()), step.pulses)
        np.testing.assert_allclose(np.diag(out.matrix).real, np.diag(expected_step1(p)).real, atol=1e-12)
        assert out.purity() == pytest.approx(1.0)

    @pytest.mark.parametrize("p", P_GRID)
    def test_ideal_steps(self, p):
        final, (s1, s2, s3) = prepare_isotropic(p)
        np.testing.assert_allclose(s1.matrix, expected_step1(p), atol=1e-9)
        np.testing.assert_allclose(s2.matrix, expected_step2(p), atol=1e-9)
        np.testing.assert_allclose(final.matrix, printed_isotropic(p), atol=1e-9)
        assert final is s3

    @given(st.floats(0, 1))
    def test_printed_matrix_is_the_isotropic_state(self, p):
        np.testing.assert_allclose(make_isotropic(p).matrix, printed_isotropic(p), atol=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            preparation_steps(-0.1, 0.0)

    def test_realistic_mode_is_physical_and_close(self):
        final, _ = prepare_isotropic(0.94, NvConfig(), ideal=False)
        assert final.eigenvalues.min() > -1e-10
        assert 0.5 < fidelity(final, make_isotropic(0.94)) < 1.0

    def test_nuclear_leakage_fidelity(self):
        f = fidelity(make_isotropic(0.5), prepare_with_nuclear_leakage(0.5))
        assert f == pytest.approx(LEAKAGE_FIDELITY_HALF, abs=1e-9)
        assert prepare_with_nuclear_leakage(0.5, p_n=1.0).matrix == pytest.approx(
            make_isotropic(0.5).matrix, abs=1e-9)

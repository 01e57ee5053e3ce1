import math

import numpy as np
import pytest

from cavitycluster.lattice import LatticeConfig
from cavitycluster.geomphase import gamma_total, pairwise_phase
from cavitycluster import oracle

# detuned reference point: large delta keeps photon occupation far below
# the n_max=4 truncation so the echo residual is integrator-limited
DETUNED_1x2 = LatticeConfig(M=1, N=2, J=0.1, delta=20.0)


@pytest.fixture(scope="module")
def echo_1x2():
    return oracle.echo_evolve(DETUNED_1x2, 3.0, 4, 1e-9)


class TestBuildHamiltonian:
    @pytest.mark.parametrize("t", [0.0, 0.37, 2.9])
    def test_hermitian(self, t):
        H = oracle.build_hamiltonian(DETUNED_1x2, t, 3)
        assert np.max(np.abs(H - H.conj().T)) < 1e-14

    def test_zero_coupling(self):
        cfg = LatticeConfig(M=1, N=2, J=0.1, delta=1.0, g=1e-300)
        H = oracle.build_hamiltonian(cfg, 0.5, 2)
        assert np.max(np.abs(H)) < 1e-290

    def test_single_cavity_structure(self):
        # 1x1 array: H(t) = sigma_x (g e^{-i w t} a + g e^{i w t} a^dag),
        # w = delta + 4J
        cfg = LatticeConfig(M=1, N=1, J=0.25, delta=1.0, g=0.7)
        w = 2.0
        t = 0.43
        n_max = 3
        a = np.diag(np.sqrt(np.arange(1.0, n_max + 1)), 1)
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        want = np.kron(sx, 0.7 * np.exp(-1j * w * t) * a + 0.7 * np.exp(1j * w * t) * a.T)
        got = oracle.build_hamiltonian(cfg, t, n_max)
        assert np.max(np.abs(got - want)) < 1e-13

    def test_dimension_cap(self):
        cfg = LatticeConfig(M=2, N=3, J=0.1)
        with pytest.raises(ValueError):
            oracle.build_hamiltonian(cfg, 0.0, 2)


class TestEvolve:
    def test_tau_zero_identity(self):
        U = oracle.evolve(DETUNED_1x2, 0.0, 2, 1e-9)
        assert np.allclose(U, np.eye(U.shape[0]))

    def test_unitarity(self):
        cfg = LatticeConfig(M=1, N=1, J=0.25, delta=1.0, g=0.3)
        U = oracle.evolve(cfg, 1.3, 10, 1e-10)
        assert np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) < 1e-9

    def test_closed_loop_phase_matches_mode_sum(self):
        # one full drive period: the field returns to vacuum and the
        # qubit picks up exactly the accumulated per-mode phase
        cfg = LatticeConfig(M=1, N=1, J=0.25, delta=1.0, g=0.3)  # omega = 2
        tau = math.pi  # omega tau = 2 pi
        U = oracle.evolve(cfg, tau, 12, 1e-10)
        dimf = 13
        plus = np.zeros(2 * dimf, dtype=complex)
        plus[0] = plus[dimf] = 1 / math.sqrt(2)  # |+x> x |vac>
        out = U @ plus
        p_vac = abs(out[0]) ** 2 + abs(out[dimf]) ** 2
        assert p_vac == pytest.approx(1.0, abs=1e-9)
        phase = np.angle(out[0] / plus[0])
        assert phase == pytest.approx(gamma_total(cfg, tau), abs=1e-8)

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            oracle.evolve(DETUNED_1x2, 1.0, 2, 0.0)


class TestEchoEvolve:
    def test_residual_cancellation(self, echo_1x2):
        assert echo_1x2.residual_excitation < 1e-8

    def test_phase_matches_mode_sum(self, echo_1x2):
        got = oracle.extract_pair_phase(echo_1x2, (0, 0), (0, 1))
        want = pairwise_phase(DETUNED_1x2, 3.0, 0, 1)
        assert abs(got - want) < 1e-6

    def test_zero_detuning_with_zero_mode(self):
        # delta=0 on 1x2 has an exact zero mode whose displacement grows
        # linearly; a reduced coupling keeps it inside the truncation
        cfg = LatticeConfig(M=1, N=2, J=0.1, delta=0.0, g=0.3)
        rep = oracle.echo_evolve(cfg, 3.0, 14, 1e-9)
        assert rep.residual_excitation < 1e-8
        got = oracle.extract_pair_phase(rep, (0, 0), (0, 1))
        assert abs(got - pairwise_phase(cfg, 3.0, 0, 1)) < 1e-6

    def test_no_time_reset_breaks_echo(self):
        # without re-zeroing the drive phase between the two blocks the
        # displacements no longer cancel
        rep = oracle.echo_evolve(DETUNED_1x2, 3.0, 4, 1e-8, time_origin_reset=False)
        assert rep.residual_excitation > 1e-3

    def test_truncation_robustness(self, echo_1x2):
        g4 = oracle.extract_pair_phase(echo_1x2, (0, 0), (0, 1))
        rep8 = oracle.echo_evolve(DETUNED_1x2, 3.0, 8, 1e-9)
        g8 = oracle.extract_pair_phase(rep8, (0, 0), (0, 1))
        assert abs(g8 - g4) < 1e-7

    def test_tightening_tolerance_reduces_residual(self):
        loose = oracle.echo_evolve(DETUNED_1x2, 3.0, 4, 1e-5)
        tight = oracle.echo_evolve(DETUNED_1x2, 3.0, 4, 1e-9)
        assert tight.residual_excitation <= loose.residual_excitation + 1e-12


class TestExtractPairPhase:
    def test_zero_coupling_zero_phase(self):
        cfg = LatticeConfig(M=1, N=2, J=0.1, delta=20.0, g=1e-8)
        rep = oracle.echo_evolve(cfg, 3.0, 2, 1e-9)
        assert abs(oracle.extract_pair_phase(rep, (0, 0), (0, 1))) < 1e-12

    def test_residual_gate(self):
        rep = oracle.echo_evolve(DETUNED_1x2, 3.0, 4, 1e-8, time_origin_reset=False)
        with pytest.raises(oracle.InvalidExtractionError):
            oracle.extract_pair_phase(rep, (0, 0), (0, 1))

    def test_same_site_rejected(self, echo_1x2):
        with pytest.raises(ValueError):
            oracle.extract_pair_phase(echo_1x2, (0, 0), (0, 0))


class TestIdentities:
    @pytest.mark.parametrize("M,N", [(1, 2), (1, 3), (2, 2)])
    def test_all_hold(self, M, N):
        report = oracle.check_identities(M, N)
        for name, defect in report.items():
            assert defect <= 1e-14, name

    def test_corrupted_sz_breaks_anticommutation(self):
        report = oracle.check_identities(1, 2, skip_site=(0, 1))
        assert report["anticommutator_sz_jx"] > 0.1

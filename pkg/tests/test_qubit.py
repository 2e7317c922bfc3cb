"""Tests for the qubit state container and parameter validation."""

import numpy as np
import pytest

from mirrorqed.params import NumericsParams, SystemParams
from mirrorqed.qubit import QubitDensityMatrix, bloch_average


class TestQubitDensityMatrix:
    def test_ground_state_bloch(self):
        np.testing.assert_allclose(QubitDensityMatrix.ground().bloch, [0, 0, -1])

    def test_bloch_round_trip(self):
        state = QubitDensityMatrix.from_bloch(0.3, -0.2, 0.4)
        np.testing.assert_allclose(state.bloch, [0.3, -0.2, 0.4], atol=1e-12)
        assert state.rho_ee == pytest.approx(0.7)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            QubitDensityMatrix(np.array([[0.5, 0.5], [0.1, 0.5]], dtype=complex))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            QubitDensityMatrix(np.diag([0.7, 0.7]).astype(complex))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="eigenvalue"):
            QubitDensityMatrix.from_bloch(0.9, 0.9, 0.9)

    def test_state_vector_of_pure_state(self):
        vec = np.array([1.0, 1.0j]) / np.sqrt(2)
        state = QubitDensityMatrix.pure(vec)
        recovered = state.state_vector()
        overlap = abs(np.vdot(recovered, vec))
        assert overlap == pytest.approx(1.0, abs=1e-10)

    def test_state_vector_rejects_mixed(self):
        with pytest.raises(ValueError, match="mixed"):
            QubitDensityMatrix.maximally_mixed().state_vector()

    def test_matrix_is_read_only(self):
        state = QubitDensityMatrix.ground()
        with pytest.raises(ValueError):
            state.matrix[0, 0] = 1.0

    def test_bloch_average(self):
        mean = bloch_average(
            [QubitDensityMatrix.ground(), QubitDensityMatrix.excited()]
        )
        np.testing.assert_allclose(mean.bloch, [0, 0, 0], atol=1e-12)


class TestParams:
    def test_system_gamma_sum(self):
        sp = SystemParams(omega=1.0, gamma_l=0.3, gamma_r=0.2)
        assert sp.gamma == pytest.approx(0.5)

    def test_system_rejects_no_decay(self):
        with pytest.raises(ValueError):
            SystemParams(omega=1.0, gamma_l=0.0, gamma_r=0.0)

    def test_numerics_rejects_large_dt(self):
        sp = SystemParams(omega=4.0)
        np_ = NumericsParams(dt=0.05, t_max=1.0)
        with pytest.raises(ValueError, match="dt"):
            np_.validate_for(sp)

    def test_numerics_rejects_off_grid_tau(self):
        sp = SystemParams(omega=1.0, tau=0.05)
        np_ = NumericsParams(dt=0.02, t_max=1.0)
        with pytest.raises(ValueError, match="integer multiple"):
            np_.validate_for(sp)

    def test_delay_bins(self):
        sp = SystemParams(omega=1.0, tau=0.5)
        np_ = NumericsParams(dt=0.025, t_max=1.0)
        assert np_.delay_bins(sp) == 20

    def test_window_default(self):
        sp = SystemParams(omega=1.0, tau=8.0)
        np_ = NumericsParams(dt=0.05, t_max=1.0)
        assert np_.resolved_ss_window(sp) == pytest.approx(8.0)
        sp2 = SystemParams(omega=1.0, tau=0.5)
        assert np_.resolved_ss_window(sp2) == pytest.approx(5.0)

import math

import numpy as np
import pytest

from hrrkit.errors import AlphaInfeasibleError
from hrrkit.vmd import (
    AlphaSearchTrace,
    GateThresholds,
    ModeSet,
    VmdParams,
    energy_loss,
    mode_correlation_max,
    select_alpha,
    vmd_decompose,
)

from conftest import tone

FS = 20.0
DURATION = 38.4  # 768 samples


def two_tone(f1=0.35, f2=1.5, a2=0.7):
    return tone(f1, FS, DURATION, phase=0.3) + tone(f2, FS, DURATION, amp=a2, phase=1.1)


def modeset_from(modes, residual=None, input_signal=None, fs=FS):
    modes = np.asarray(modes, dtype=float)
    if input_signal is None:
        input_signal = modes.sum(axis=0) if residual is None else modes.sum(axis=0) + residual
    if residual is None:
        residual = input_signal - modes.sum(axis=0)
    return ModeSet(
        modes=modes,
        center_freqs=np.zeros(len(modes)),
        residual=np.asarray(residual, dtype=float),
        input_signal=np.asarray(input_signal, dtype=float),
        input_energy=float(np.dot(input_signal, input_signal)),
        sample_rate=fs,
        converged=True,
        n_iters=1,
    )


class TestDecompose:
    def test_pure_tone_single_mode(self):
        sig = tone(1.0, FS, DURATION)
        ms = vmd_decompose(sig, FS, VmdParams(K=2, alpha=200.0))
        energies = ms.mode_energies
        main = int(np.argmax(energies))
        assert energies[main] / energies.sum() >= 0.99
        assert abs(ms.center_freqs[main] - 1.0) < 0.05

    def test_two_tone_recovery(self):
        sig = two_tone()
        ms = vmd_decompose(sig, FS, VmdParams(K=2, alpha=200.0))
        freqs = np.sort(ms.center_freqs)
        assert freqs == pytest.approx([0.35, 1.5], abs=0.05)
        for f, amp, ph in ((0.35, 1.0, 0.3), (1.5, 0.7, 1.1)):
            k = int(np.argmin(np.abs(ms.center_freqs - f)))
            src = tone(f, FS, DURATION, amp=amp, phase=ph)
            assert abs(np.corrcoef(ms.modes[k], src)[0, 1]) > 0.99

    def test_zero_signal(self):
        ms = vmd_decompose(np.zeros(256), FS, VmdParams(K=3, alpha=500.0))
        assert np.array_equal(ms.modes, np.zeros_like(ms.modes))
        assert np.array_equal(ms.residual, np.zeros(256))

    def test_reconstruction_identity_bit_exact(self):
        ms = vmd_decompose(two_tone(), FS, VmdParams(K=2, alpha=200.0))
        err = ms.input_signal - ms.modes.sum(axis=0) - ms.residual
        assert np.all(err == 0.0)

    def test_rejects_short_input(self):
        with pytest.raises(ValueError, match="length"):
            vmd_decompose(np.ones(32), FS, VmdParams())

    def test_rejects_non_finite(self):
        bad = np.ones(128)
        bad[5] = np.nan
        with pytest.raises(ValueError, match="finite"):
            vmd_decompose(bad, FS, VmdParams())

    def test_termination_recorded(self):
        ms = vmd_decompose(two_tone(), FS, VmdParams(K=2, alpha=200.0))
        assert ms.converged and 1 <= ms.n_iters <= 500
        ms2 = vmd_decompose(two_tone(), FS, VmdParams(K=2, alpha=200.0, max_iters=3))
        assert not ms2.converged and ms2.n_iters == 3

    def test_mode_narrowbandedness(self):
        ms = vmd_decompose(two_tone(), FS, VmdParams(K=2, alpha=200.0))
        n = ms.modes.shape[1]
        freqs = np.fft.rfftfreq(n, d=1.0 / FS)
        for k in range(2):
            power = np.abs(np.fft.rfft(ms.modes[k])) ** 2
            in_band = power[np.abs(freqs - ms.center_freqs[k]) <= 0.3].sum()
            assert in_band / power.sum() >= 0.9

    def test_params_validation(self):
        with pytest.raises(ValueError):
            VmdParams(K=1)
        with pytest.raises(ValueError):
            VmdParams(alpha=-1.0)


class TestGateDiagnostics:
    def test_identical_modes_fully_correlated(self):
        x = tone(0.8, FS, 12.8)
        ms = modeset_from([x, x])
        assert mode_correlation_max(ms) == pytest.approx(1.0)

    def test_orthogonal_quadrature_pair(self):
        t = np.arange(round(10 * FS)) / FS  # whole periods of 0.5 Hz
        ms = modeset_from([np.sin(2 * np.pi * 0.5 * t), np.cos(2 * np.pi * 0.5 * t)])
        assert mode_correlation_max(ms) < 1e-10

    def test_correlation_matches_definitional_oracle(self):
        rng = np.random.default_rng(5)
        u = rng.normal(size=(3, 32))
        ms = modeset_from(u)
        # direct summation of r_ij = (E(ui uj) - E(ui)E(uj)) / sqrt(D(ui) D(uj))
        best = 0.0
        for i in range(3):
            for j in range(i + 1, 3):
                e_ij = sum(u[i, k] * u[j, k] for k in range(32)) / 32
                e_i = sum(u[i]) / 32
                e_j = sum(u[j]) / 32
                d_i = sum((v - e_i) ** 2 for v in u[i]) / 32
                d_j = sum((v - e_j) ** 2 for v in u[j]) / 32
                best = max(best, abs((e_ij - e_i * e_j) / math.sqrt(d_i * d_j)))
        assert mode_correlation_max(ms) == pytest.approx(best, abs=1e-12)

    def test_fewer_than_two_live_modes_gives_zero(self):
        x = tone(0.8, FS, 12.8)
        ms = modeset_from([x, np.zeros_like(x)])
        assert mode_correlation_max(ms) == 0.0

    def test_energy_loss_zero_residual(self):
        x = two_tone()
        ms = modeset_from([x], residual=np.zeros_like(x), input_signal=x)
        assert energy_loss(ms) == 0.0

    def test_energy_loss_half_mode(self):
        x = two_tone()
        ms = modeset_from([x / 2.0], input_signal=x)
        assert energy_loss(ms) == pytest.approx(0.25, abs=1e-12)

    def test_energy_loss_matches_norm_oracle(self):
        rng = np.random.default_rng(11)
        f = rng.normal(size=128)
        u = rng.normal(size=(2, 128)) * 0.4
        ms = modeset_from(u, input_signal=f)
        expected = float(np.dot(f - u.sum(axis=0), f - u.sum(axis=0)) / np.dot(f, f))
        assert energy_loss(ms) == pytest.approx(expected, abs=1e-12)

    def test_energy_loss_rejects_zero_input(self):
        z = np.zeros(64)
        ms = modeset_from([z], input_signal=z)
        with pytest.raises(ValueError, match="zero-energy"):
            energy_loss(ms)


class TestSelectAlpha:
    def test_returned_decomposition_passes_gates(self):
        gates = GateThresholds()
        alpha, ms = select_alpha(two_tone(), FS, 2, gates)
        assert mode_correlation_max(ms) <= gates.mu1
        assert energy_loss(ms) <= gates.mu2

    def test_default_gate_values(self):
        gates = GateThresholds()
        assert gates.mu1 == 0.2 and gates.mu2 == 1e-4

    def test_impossible_energy_gate_is_infeasible(self):
        with pytest.raises(AlphaInfeasibleError) as exc_info:
            select_alpha(two_tone(), FS, 2, GateThresholds(mu1=0.2, mu2=0.0))
        assert exc_info.value.best_p > 0.0

    def test_search_cost_bounded(self):
        trace = AlphaSearchTrace()
        select_alpha(two_tone(), FS, 2, search_trace=trace)
        budget = math.ceil(math.log2(math.log(1e6 / 10.0) / math.log(1.1))) + 1
        assert len(trace.alphas) <= budget

    def test_gate_threshold_validation(self):
        with pytest.raises(ValueError):
            GateThresholds(mu1=0.0)
        with pytest.raises(ValueError):
            GateThresholds(mu2=1.5)


class TestMonotonicity:
    def test_diagnostics_monotone_over_alpha_sweep(self):
        """p non-decreasing and r_max non-increasing (<=5% local violations)."""
        sig = two_tone()
        alphas = np.geomspace(10.0, 8000.0, 41)
        r_vals, p_vals = [], []
        for a in alphas:
            ms = vmd_decompose(sig, FS, VmdParams(K=2, alpha=float(a)))
            r_vals.append(mode_correlation_max(ms))
            p_vals.append(energy_loss(ms))
        p_viol = int(np.sum(np.diff(p_vals) < 0))
        r_viol = int(np.sum(np.diff(r_vals) > 0))
        n_pairs = len(alphas) - 1
        assert p_viol <= 0.05 * n_pairs
        assert r_viol <= 0.05 * n_pairs

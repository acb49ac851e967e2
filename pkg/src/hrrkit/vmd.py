"""Variational mode decomposition with gate-driven penalty selection.

The decomposition follows the standard ADMM scheme: one-sided spectrum,
Wiener-like mode updates, center frequencies as power-weighted spectral
means, optional dual ascent. The window is mirror-extended before the FFT
and cropped afterwards to tame edge artifacts.

The penalty factor alpha trades mode aliasing (too small: modes overlap,
pairwise correlation rises) against decomposition energy loss (too large:
modes narrow, residual grows). Two diagnostics quantify the trade-off:

* ``mode_correlation_max`` -- the largest absolute Pearson correlation
  over mode pairs; must stay below the ceiling mu1.
* ``energy_loss`` -- residual-to-input energy ratio; must stay below mu2.

``select_alpha`` bisects alpha in log space until a decomposition passes
both gates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AlphaInfeasibleError

MIN_SIGNAL_LENGTH = 64

# Modes whose variance falls below this fraction of the input variance are
# numerical dust (surplus modes on clean signals); they are excluded from
# the pairwise-correlation gate.
_NEGLIGIBLE_VAR_FRACTION = 1e-10


@dataclass(frozen=True)
class VmdParams:
    """Decomposition knobs. ``alpha`` is in the vmdpy normalized convention."""

    K: int = 6
    alpha: float = 2000.0
    tau: float = 0.0
    tolerance: float = 1e-7
    max_iters: int = 500
    mirror_frac: float = 0.1

    def __post_init__(self):
        if not 2 <= self.K <= 7:
            raise ValueError(f"K must be in [2, 7], got {self.K}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 <= self.mirror_frac <= 0.5:
            raise ValueError(f"mirror_frac must be in [0, 0.5], got {self.mirror_frac}")


@dataclass(frozen=True)
class GateThresholds:
    """Acceptance ceilings for the two decomposition diagnostics."""

    mu1: float = 0.2    # max pairwise |Pearson r| between modes
    mu2: float = 1e-4   # max residual-to-input energy ratio

    def __post_init__(self):
        if not 0.0 < self.mu1 < 1.0:
            raise ValueError(f"mu1 must be in (0, 1), got {self.mu1}")
        # mu2 == 0 is permitted so an unsatisfiable energy gate can be
        # expressed; it always yields AlphaInfeasibleError.
        if not 0.0 <= self.mu2 < 1.0:
            raise ValueError(f"mu2 must be in [0, 1), got {self.mu2}")


@dataclass
class ModeSet:
    """Result of one decomposition, modes ordered by descending energy.

    ``residual`` is defined as ``input - modes.sum(axis=0)`` evaluated in
    that fixed order, so ``input - sum(modes) - residual`` is exactly zero.
    """

    modes: np.ndarray          # (K, n)
    center_freqs: np.ndarray   # Hz, aligned with mode order
    residual: np.ndarray
    input_signal: np.ndarray
    input_energy: float
    sample_rate: float
    converged: bool
    n_iters: int

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    @property
    def mode_energies(self) -> np.ndarray:
        return np.sum(self.modes**2, axis=1)

    @property
    def freq_order(self) -> np.ndarray:
        """Indices that sort the modes by ascending center frequency."""
        return np.argsort(self.center_freqs, kind="stable")

    def reconstruction_error(self) -> np.ndarray:
        """Exactly zero by construction; kept as the checkable identity."""
        return self.input_signal - self.modes.sum(axis=0) - self.residual


def vmd_decompose(
    signal: np.ndarray, sample_rate: float, params: VmdParams
) -> ModeSet:
    """Decompose ``signal`` into ``params.K`` narrowband modes.

    Center frequencies are initialized uniformly over [0, sample_rate/4]
    and converge to the power-weighted means of their mode spectra.
    Iteration stops when the relative change of the mode spectra drops
    below ``params.tolerance`` or after ``params.max_iters`` sweeps; the
    termination reason is recorded on the result.
    """
    f = np.asarray(signal, dtype=float)
    if f.ndim != 1:
        raise ValueError("signal must be one-dimensional")
    if len(f) < MIN_SIGNAL_LENGTH:
        raise ValueError(
            f"signal length must be >= {MIN_SIGNAL_LENGTH}, got {len(f)}"
        )
    if not np.all(np.isfinite(f)):
        raise ValueError("signal contains non-finite values")

    n = len(f)
    m = max(1, round(params.mirror_frac * n))
    ext = np.concatenate([f[:m][::-1], f, f[-m:][::-1]])
    T = len(ext)

    freqs = np.fft.fftfreq(T)          # cycles/sample, unshifted
    pos = freqs >= 0.0                 # one-sided mask (DC included)
    f_hat = np.fft.fft(ext)
    f_plus = np.where(pos, f_hat, 0.0)

    K = params.K
    alpha = params.alpha
    u_hat = np.zeros((K, T), dtype=complex)
    omega = (np.arange(K) + 0.5) / K * 0.25   # uniform over [0, fs/4], normalized
    lam = np.zeros(T, dtype=complex)
    sum_u = u_hat.sum(axis=0)

    converged = False
    it = 0
    for it in range(1, params.max_iters + 1):
        u_prev = u_hat.copy()
        for k in range(K):
            sum_u = sum_u - u_hat[k]
            numer = f_plus - sum_u - lam / 2.0
            u_hat[k] = numer / (1.0 + alpha * (freqs - omega[k]) ** 2)
            sum_u = sum_u + u_hat[k]
            power = np.abs(u_hat[k][pos]) ** 2
            denom = power.sum()
            if denom > 1e-300:
                omega[k] = float(np.dot(freqs[pos], power) / denom)
        if params.tau != 0.0:
            lam = lam + params.tau * (sum_u - f_plus)
        diff = np.sum(np.abs(u_hat - u_prev) ** 2)
        norm = np.sum(np.abs(u_prev) ** 2)
        if diff <= params.tolerance * max(norm, 1e-300):
            converged = True
            break

    # Hermitian completion and inverse transform, then crop the mirrors.
    modes = np.empty((K, n))
    spec = np.zeros(T, dtype=complex)
    half = (T - 1) // 2
    for k in range(K):
        spec[:] = 0.0
        spec[pos] = u_hat[k][pos]
        spec[T - half : T] = np.conj(spec[1 : half + 1][::-1])
        modes[k] = np.real(np.fft.ifft(spec))[m : m + n]

    energies = np.sum(modes**2, axis=1)
    order = np.argsort(energies, kind="stable")[::-1]
    modes = modes[order]
    center_freqs = omega[order] * sample_rate

    residual = f - modes.sum(axis=0)
    return ModeSet(
        modes=modes,
        center_freqs=center_freqs,
        residual=residual,
        input_signal=f,
        input_energy=float(np.dot(f, f)),
        sample_rate=sample_rate,
        converged=converged,
        n_iters=it,
    )


def mode_correlation_max(ms: ModeSet) -> float:
    """Largest |Pearson r| over mode pairs, the aliasing diagnostic.

    r_ij = (E(u_i u_j) - E(u_i) E(u_j)) / sqrt(D(u_i) D(u_j)). Modes with
    negligible variance are excluded; fewer than two usable modes gives 0.
    """
    modes = ms.modes
    variances = modes.var(axis=1)
    floor = _NEGLIGIBLE_VAR_FRACTION * max(ms.input_signal.var(), 1e-300)
    usable = np.flatnonzero(variances > floor)
    if len(usable) < 2:
        return 0.0
    r_max = 0.0
    for a in range(len(usable)):
        for b in range(a + 1, len(usable)):
            i, j = usable[a], usable[b]
            cov = np.mean(modes[i] * modes[j]) - modes[i].mean() * modes[j].mean()
            r = abs(cov) / math.sqrt(variances[i] * variances[j])
            r_max = max(r_max, r)
    return r_max


def energy_loss(ms: ModeSet) -> float:
    """Residual-to-input energy ratio p = ||f - sum(u_k)||^2 / ||f||^2."""
    if ms.input_energy <= 0.0:
        raise ValueError("energy loss is undefined for a zero-energy input")
    return float(np.dot(ms.residual, ms.residual)) / ms.input_energy


@dataclass
class AlphaSearchTrace:
    """Diagnostics of one select_alpha run (one row per decomposition)."""

    alphas: list = field(default_factory=list)
    r_max_values: list = field(default_factory=list)
    p_values: list = field(default_factory=list)


def select_alpha(
    signal: np.ndarray,
    sample_rate: float,
    K: int,
    gates: GateThresholds = GateThresholds(),
    alpha_range: tuple[float, float] = (10.0, 1e6),
    ratio_tol: float = 1.1,
    params: Optional[VmdParams] = None,
    search_trace: Optional[AlphaSearchTrace] = None,
) -> tuple[float, ModeSet]:
    """Find a penalty factor whose decomposition passes both gates.

    Bisects alpha in log space: too much mode correlation pushes the lower
    bound up, too much energy loss pushes the upper bound down. Energy loss
    takes priority when both gates fail at once, because that regime sits
    at the over-decomposed high end where shrinking alpha restores both
    diagnostics. Stops as soon as a feasible decomposition is found, or
    raises AlphaInfeasibleError once the bracket ratio falls below
    ``ratio_tol``.
    """
    lo, hi = alpha_range
    if not 0 < lo < hi:
        raise ValueError(f"require 0 < alpha_lo < alpha_hi, got {alpha_range}")
    base = params if params is not None else VmdParams(K=K)

    best_r, best_p = math.inf, math.inf
    best: Optional[tuple[float, ModeSet]] = None

    def violation(r: float, p: float) -> float:
        return max(r / gates.mu1 - 1.0, 0.0) + (
            max(p / gates.mu2 - 1.0, 0.0) if gates.mu2 > 0 else math.inf
        )

    while True:
        mid = math.sqrt(lo * hi)
        ms = vmd_decompose(signal, sample_rate, _with_alpha(base, K, mid))
        r = mode_correlation_max(ms)
        p = energy_loss(ms)
        if search_trace is not None:
            search_trace.alphas.append(mid)
            search_trace.r_max_values.append(r)
            search_trace.p_values.append(p)
        if best is None or violation(r, p) < violation(best_r, best_p):
            best_r, best_p, best = r, p, (mid, ms)
        if r <= gates.mu1 and p <= gates.mu2:
            return mid, ms
        if p > gates.mu2:
            hi = mid
        else:
            lo = mid
        if hi / lo < ratio_tol:
            err = AlphaInfeasibleError(
                f"alpha search exhausted in [{alpha_range[0]:.1f}, "
                f"{alpha_range[1]:.1f}] without satisfying r_max <= {gates.mu1} "
                f"and p <= {gates.mu2} (best r_max={best_r:.3f}, p={best_p:.2e})",
                best_r_max=best_r,
                best_p=best_p,
            )
            err.best_alpha, err.best_modeset = best
            raise err


def _with_alpha(base: VmdParams, K: int, alpha: float) -> VmdParams:
    return VmdParams(
        K=K,
        alpha=alpha,
        tau=base.tau,
        tolerance=base.tolerance,
        max_iters=base.max_iters,
        mirror_frac=base.mirror_frac,
    )

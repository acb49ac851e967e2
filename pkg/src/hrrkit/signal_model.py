"""Synthetic chest-motion signals with known ground truth.

Chest displacement is modeled as the superposition of a non-sinusoidal
quasi-periodic respiration waveform (fundamental plus a handful of
harmonics), a heartbeat waveform whose instantaneous rate follows an
arbitrary trajectory, and additive white Gaussian noise. The heartbeat
phase is obtained by integrating the rate trajectory, so the instantaneous
frequency of the synthesized beat train is exact and the true beat times
are recoverable for evaluation.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

MIN_RESP_FREQ_HZ = 10.0 / 60.0  # adult respiratory floor, 10 breaths/min
MAX_RESP_HARMONICS = 5          # nonzero harmonics allowed above the fundamental
HR_FLOOR_BPM = 40.0
HR_CEILING_BPM = 220.0
MIN_SAMPLE_RATE_HZ = 20.0       # Nyquist margin above the 3.4 Hz band edge

# Oversampling factor used when integrating the rate trajectory into phase.
_PHASE_OVERSAMPLE = 8


class WaveformShape(enum.Enum):
    SINUSOID = "sinusoid"
    PULSE = "pulse"


@dataclass(frozen=True)
class RespirationModel:
    """Fourier-series respiration waveform.

    ``harmonic_amplitudes[i]`` is the amplitude in mm of the (i+1)-th
    multiple of the fundamental, i.e. index 0 holds the fundamental
    amplitude. The DC term is absent by construction (it would be removed
    by band-pass filtering anyway).
    """

    fundamental_freq: float
    harmonic_amplitudes: tuple[float, ...]
    phase_offset: float = 0.0

    def __post_init__(self):
        if self.fundamental_freq < MIN_RESP_FREQ_HZ:
            raise ValueError(
                f"fundamental_freq must be >= {MIN_RESP_FREQ_HZ:.4f} Hz "
                f"(10 breaths/min), got {self.fundamental_freq}"
            )
        amps = tuple(float(a) for a in self.harmonic_amplitudes)
        object.__setattr__(self, "harmonic_amplitudes", amps)
        if not amps or amps[0] <= 0:
            raise ValueError("fundamental amplitude (harmonic_amplitudes[0]) must be > 0")
        n_upper = sum(1 for a in amps[1:] if a != 0.0)
        if n_upper > MAX_RESP_HARMONICS:
            raise ValueError(
                f"at most {MAX_RESP_HARMONICS} nonzero harmonics above the "
                f"fundamental are allowed, got {n_upper}"
            )

    def waveform(self, t: np.ndarray) -> np.ndarray:
        """Displacement in mm at times ``t`` (seconds)."""
        t = np.asarray(t, dtype=float)
        x = np.zeros_like(t)
        base = 2.0 * np.pi * self.fundamental_freq * t + self.phase_offset
        for i, a in enumerate(self.harmonic_amplitudes):
            if a != 0.0:
                x += a * np.cos((i + 1) * base)
        return x


@dataclass(frozen=True)
class ExponentialRecovery:
    """HR(t) = hr_final + (hr_initial - hr_final) * exp(-t / time_constant)."""

    hr_initial: float
    hr_final: float
    time_constant: float

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.hr_final + (self.hr_initial - self.hr_final) * np.exp(
            -t / self.time_constant
        )


@dataclass(frozen=True)
class ConstantRate:
    """Flat HR trajectory."""

    bpm: float

    def __call__(self, t) -> np.ndarray:
        return np.full_like(np.asarray(t, dtype=float), self.bpm)


@dataclass(frozen=True)
class LinearRamp:
    """HR sliding linearly from start to end over [0, t_end], then flat."""

    start_bpm: float
    end_bpm: float
    t_end: float

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        frac = np.clip(t / self.t_end, 0.0, 1.0)
        return self.start_bpm + (self.end_bpm - self.start_bpm) * frac


def exponential_recovery(
    hr_initial: float, hr_final: float, time_constant: float
) -> ExponentialRecovery:
    """Build the post-exercise exponential recovery trajectory.

    ``hr_initial == hr_final`` degenerates to a constant rate and is allowed.
    """
    if not hr_initial >= hr_final > 0:
        raise ValueError(
            f"require hr_initial >= hr_final > 0, got ({hr_initial}, {hr_final})"
        )
    if time_constant <= 0:
        raise ValueError(f"time_constant must be > 0, got {time_constant}")
    return ExponentialRecovery(hr_initial, hr_final, time_constant)


@dataclass(frozen=True)
class HeartbeatModel:
    """Heartbeat-induced chest motion with a time-varying rate.

    ``rate_trajectory`` maps time in seconds (scalar or ndarray) to
    instantaneous HR in bpm. The beat phase is the integral of the rate,
    so beats occur exactly where the accumulated phase crosses multiples
    of 2*pi.
    """

    rate_trajectory: Callable[[np.ndarray], np.ndarray]
    amplitude: float
    waveform_shape: WaveformShape = WaveformShape.SINUSOID

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ValueError(f"heartbeat amplitude must be > 0, got {self.amplitude}")

    def phase(self, t: np.ndarray) -> np.ndarray:
        """Accumulated beat phase (radians) on a uniform time grid ``t``."""
        t = np.asarray(t, dtype=float)
        if t.size < 2:
            return np.zeros_like(t)
        # Integrate on an oversampled grid for accuracy, then decimate.
        n_fine = (t.size - 1) * _PHASE_OVERSAMPLE + 1
        t_fine = np.linspace(t[0], t[-1], n_fine)
        rate = np.asarray(self.rate_trajectory(t_fine), dtype=float)
        if rate.min() < HR_FLOOR_BPM or rate.max() > HR_CEILING_BPM:
            raise ValueError(
                f"rate_trajectory must stay within [{HR_FLOOR_BPM:.0f}, "
                f"{HR_CEILING_BPM:.0f}] bpm over the window, got "
                f"[{rate.min():.2f}, {rate.max():.2f}]"
            )
        phase_fine = 2.0 * np.pi * cumulative_trapezoid(rate / 60.0, t_fine, initial=0.0)
        return phase_fine[::_PHASE_OVERSAMPLE]

    def waveform(self, t: np.ndarray) -> np.ndarray:
        """Displacement in mm at times ``t`` (uniform grid, seconds)."""
        theta = self.phase(t)
        if self.waveform_shape is WaveformShape.SINUSOID:
            return self.amplitude * np.cos(theta)
        # Narrow raised-cosine pulse per beat, width 25% of the beat period,
        # peaking exactly at integer beats (theta = 2*pi*k).
        wrapped = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
        pulse = np.where(
            np.abs(wrapped) <= np.pi / 4.0,
            0.5 * (1.0 + np.cos(4.0 * wrapped)),
            0.0,
        )
        return self.amplitude * pulse

    def beat_times(self, duration: float, resolution: float = 1e-4) -> np.ndarray:
        """True beat instants (phase crossing 2*pi*k) within [0, duration]."""
        t = np.arange(0.0, duration + resolution, resolution)
        theta = self.phase(t)
        k = np.arange(0.0, theta[-1] / (2.0 * np.pi) + 1.0)
        return np.interp(2.0 * np.pi * k, theta, t)


@dataclass(frozen=True)
class GroundTruth:
    """Generation record attached to a synthetic trace."""

    respiration: Optional[RespirationModel]
    heartbeat: Optional[HeartbeatModel]
    noise_std: float
    seed: int

    def heart_rate_at(self, t) -> np.ndarray:
        if self.heartbeat is None:
            raise ValueError("trace has no heartbeat component")
        return np.asarray(self.heartbeat.rate_trajectory(np.asarray(t, dtype=float)))


@dataclass
class ChestMotionTrace:
    """Uniformly sampled chest-motion sequence, the pipeline's central type.

    ``unit`` is "mm" for displacement or "rad" for raw phase.
    """

    samples: np.ndarray
    sample_rate: float
    unit: str = "mm"
    ground_truth: Optional[GroundTruth] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.sample_rate < MIN_SAMPLE_RATE_HZ:
            raise ValueError(
                f"sample_rate must be >= {MIN_SAMPLE_RATE_HZ} Hz, got {self.sample_rate}"
            )
        if self.unit not in ("mm", "rad"):
            raise ValueError(f"unit must be 'mm' or 'rad', got {self.unit!r}")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate


def synthesize_trace(
    resp: Optional[RespirationModel],
    heart: Optional[HeartbeatModel],
    noise_std: float,
    sample_rate: float = 100.0,
    duration: float = 60.0,
    seed: int = 0,
) -> ChestMotionTrace:
    """Superpose respiration, heartbeat, and noise into a displacement trace.

    Deterministic for a fixed seed. Either component may be None, which
    synthesizes the other in isolation; the sum of the two single-component
    traces equals the combined noiseless trace sample-for-sample.
    """
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    if resp is not None and heart is not None:
        if heart.amplitude >= resp.harmonic_amplitudes[0]:
            raise ValueError(
                "heartbeat amplitude must be smaller than the respiration "
                f"fundamental amplitude ({heart.amplitude} >= "
                f"{resp.harmonic_amplitudes[0]})"
            )
    n = round(sample_rate * duration)
    t = np.arange(n) / sample_rate
    x = np.zeros(n)
    if resp is not None:
        x = x + resp.waveform(t)
    if heart is not None:
        x = x + heart.waveform(t)
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        x = x + rng.normal(0.0, noise_std, n)
    return ChestMotionTrace(
        samples=x,
        sample_rate=sample_rate,
        unit="mm",
        ground_truth=GroundTruth(resp, heart, noise_std, seed),
    )

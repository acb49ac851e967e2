"""HR tracking by peak counting over composite sliding windows.

The selected heartbeat mode is smoothed, normalized by its envelope, and
reduced to a train of beat peaks. HR then comes from counting inter-peak
intervals inside a variable-size window W_b whose endpoints coincide with
peaks and whose length never falls below an adaptive floor l_min. W_b
slides at the output cadence inside a larger analysis window W_a (the
decomposition window); W_a advances by one stride exactly when W_b's left
endpoint enters the next placement's range, which keeps W_a minimal while
always containing W_b. Two passes are made: the first with the default
l_min, the second with l_min adapted per point to the first-pass HR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .errors import DegradedQualityError, DegenerateSignalError, NoEstimateError
from .signal_model import ChestMotionTrace

PEAK_AMPLITUDE_FLOOR = 0.5
PEAK_MIN_INTERVAL_S = 0.27   # 220 bpm ceiling
HR_MIN_BPM = 36.0
HR_MAX_BPM = 220.0

FLAG_OK = "ok"
FLAG_CARRY = "carry"
FLAG_CLAMPED = "clamped"

# W_a liveness guard: when the freshest countable peak falls this far behind
# the output time, the analysis window advances even though W_b's left
# endpoint has not crossed into the next placement (possible when peaks thin
# out near a window edge).
_STALE_LIMIT_S = 2.0


@dataclass(frozen=True)
class PeakTrain:
    """Sorted beat instants in seconds, gaps no smaller than the detector floor."""

    peak_times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.peak_times, dtype=float)
        object.__setattr__(self, "peak_times", times)
        if times.ndim != 1:
            raise ValueError("peak_times must be one-dimensional")
        if len(times) >= 2:
            gaps = np.diff(times)
            if gaps.min() < PEAK_MIN_INTERVAL_S - 1e-9:
                raise ValueError(
                    f"consecutive peaks closer than {PEAK_MIN_INTERVAL_S} s "
                    f"(min gap {gaps.min():.4f})"
                )

    def __len__(self) -> int:
        return len(self.peak_times)

    def shifted(self, offset: float) -> "PeakTrain":
        return PeakTrain(self.peak_times + offset)


@dataclass(frozen=True)
class WindowConfig:
    """Composite-window geometry. Stride and outer length derive from l_b_max."""

    l_min: float = 5.0                      # first-pass counting-window floor, s
    l_b_max: float = 8.0
    # Upper bound deliberately below l_b_max: with l_min == l_b_max the
    # advance rule can never fire (W_b spans a whole stride) and W_a stalls.
    l_min_bounds: tuple[float, float] = (3.0, 7.0)
    cadence: float = 1.0                    # output step, s

    def __post_init__(self):
        lo, hi = self.l_min_bounds
        if not 0 < lo <= hi <= self.l_b_max:
            raise ValueError(
                f"l_min_bounds must lie within (0, l_b_max={self.l_b_max}], got {self.l_min_bounds}"
            )
        if not 0 < self.l_min <= self.l_b_max:
            raise ValueError(f"l_min must be in (0, l_b_max], got {self.l_min}")
        if self.cadence <= 0:
            raise ValueError("cadence must be > 0")

    @property
    def stride(self) -> float:
        """Outer-window advance per step (the paper's delta-l = max l_b)."""
        return self.l_b_max

    @property
    def l_a(self) -> float:
        """Outer (decomposition) window length, twice the maximum l_b."""
        return 2.0 * self.l_b_max


def condition_heartbeat(
    mode: np.ndarray,
    fs: float,
    smooth_window: float = 0.12,
    envelope_floor: float = 0.1,
) -> np.ndarray:
    """Smooth the heartbeat mode and normalize its amplitude by the envelope.

    The envelope is a cubic spline through the local maxima of the smoothed
    absolute signal, held constant beyond the outermost maxima and floored
    at ``envelope_floor`` times its median so quiet stretches cannot blow
    up the division.
    """
    x = np.asarray(mode, dtype=float)
    if not np.any(x):
        raise DegenerateSignalError("heartbeat mode is identically zero")
    win = max(1, round(smooth_window * fs))
    if win % 2 == 0:
        win += 1  # odd length keeps the smoother zero-phase
    smoothed = uniform_filter1d(x, size=win, mode="nearest")
    magnitude = np.abs(smoothed)
    maxima, _ = find_peaks(magnitude)
    if len(maxima) < 2:
        raise DegenerateSignalError(
            f"too few envelope support points ({len(maxima)} maxima)"
        )
    knots_i = np.concatenate(([0], maxima, [len(x) - 1]))
    knots_v = magnitude[knots_i]
    knots_v[0] = magnitude[maxima[0]]
    knots_v[-1] = magnitude[maxima[-1]]
    spline = CubicSpline(knots_i, knots_v, bc_type="natural")
    envelope = spline(np.arange(len(x)))
    floor = envelope_floor * np.median(envelope)
    if floor <= 0.0:
        raise DegenerateSignalError("envelope has non-positive median")
    envelope = np.maximum(envelope, floor)
    return smoothed / envelope


def detect_peaks(signal: np.ndarray, fs: float) -> PeakTrain:
    """Beat peaks of a normalized signal.

    A peak is a local maximum of amplitude >= 0.5; when two candidates fall
    within 0.27 s the higher one wins (greedy suppression).
    """
    x = np.asarray(signal, dtype=float)
    distance = max(1, math.ceil(PEAK_MIN_INTERVAL_S * fs))
    idx, _ = find_peaks(x, height=PEAK_AMPLITUDE_FLOOR, distance=distance)
    return PeakTrain(idx / fs)


@dataclass(frozen=True)
class HrEstimate:
    hr_bpm: float
    l_b: float
    window_start: float   # time of the first peak in W_b
    window_end: float     # time of the last peak in W_b
    n_peaks: int


def count_hr(train: PeakTrain, cfg: WindowConfig, t: float, l_min: Optional[float] = None) -> HrEstimate:
    """HR at time t from the peak-delimited window ending at the last peak <= t.

    The window start is the latest earlier peak keeping the span at or above
    l_min; with both endpoints on peaks, N peaks span N-1 beats, so
    HR = (N - 1) / l_b * 60.
    """
    floor = cfg.l_min if l_min is None else l_min
    times = train.peak_times
    end = int(np.searchsorted(times, t, side="right")) - 1
    if end < 1:
        raise NoEstimateError(f"fewer than 2 peaks at or before t={t:.2f}")
    target = times[end] - floor
    start = int(np.searchsorted(times[: end + 1], target, side="right")) - 1
    if start < 0:
        raise NoEstimateError(
            f"no peak at least l_min={floor:.2f} s before the window end"
        )
    l_b = float(times[end] - times[start])
    n = end - start + 1
    return HrEstimate(
        hr_bpm=(n - 1) * 60.0 / l_b,
        l_b=l_b,
        window_start=float(times[start]),
        window_end=float(times[end]),
        n_peaks=n,
    )


def adapt_lmin(prev_hr: float, cfg: WindowConfig) -> float:
    """Counting-window floor targeting ~10 beats: clamp(600/HR, bounds)."""
    lo, hi = cfg.l_min_bounds
    if prev_hr <= 0:
        return hi
    return float(min(max(600.0 / prev_hr, lo), hi))


@dataclass
class WindowResult:
    """Output of the per-W_a stage (decomposition + selection + detection)."""

    start_time: float
    peaks: Optional[PeakTrain]            # absolute times, None if unusable
    alpha: Optional[float] = None
    mode_table: list = field(default_factory=list)
    status: str = "ok"                    # ok | gates_relaxed | no_heartbeat | degenerate


StageFn = Callable[[np.ndarray, float, float], WindowResult]


@dataclass
class HrPoint:
    time: float
    hr_bpm: float
    l_b: float
    flag: str
    wa_index: int
    wa_start: float
    wa_end: float
    wb_start: float
    wb_end: float
    l_min_used: float
    hr_first_pass: float = math.nan  # default-l_min estimate at this time


@dataclass
class HrSeries:
    """Timestamped HR estimates at a fixed cadence plus window diagnostics."""

    points: list[HrPoint]
    cadence: float
    window_results: dict[int, WindowResult]

    @property
    def times(self) -> np.ndarray:
        return np.array([p.time for p in self.points])

    @property
    def hr_bpm(self) -> np.ndarray:
        return np.array([p.hr_bpm for p in self.points])

    @property
    def flags(self) -> list[str]:
        return [p.flag for p in self.points]

    def value_at(self, t: float) -> HrPoint:
        times = self.times
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > self.cadence / 2 + 1e-9:
            raise ValueError(f"series has no point within half a cadence of t={t}")
        return self.points[i]


def run_composite_windows(
    trace: ChestMotionTrace,
    cfg: WindowConfig,
    stage: StageFn,
    carry_limit: float = 0.5,
) -> HrSeries:
    """Sweep W_b at the output cadence, advancing W_a per the containment rule.

    Runs the stage once per W_a placement (cached), makes the default-l_min
    pass, then repeats with l_min adapted per point from the first pass.
    Windows with no usable heartbeat carry the last valid estimate forward,
    flagged; more than ``carry_limit`` of carried points raises
    DegradedQualityError.
    """
    fs = trace.sample_rate
    x = trace.samples
    duration = trace.duration
    if duration < cfg.l_a:
        raise ValueError(
            f"trace duration {duration:.2f} s is shorter than the analysis "
            f"window l_a={cfg.l_a:.2f} s"
        )
    k_max = int(math.floor((duration - cfg.l_a) / cfg.stride + 1e-9))
    cache: dict[int, WindowResult] = {}

    def window_result(k: int) -> WindowResult:
        if k not in cache:
            t0 = k * cfg.stride
            i0 = round(t0 * fs)
            i1 = min(round((t0 + cfg.l_a) * fs), len(x))
            cache[k] = stage(x[i0:i1], fs, t0)
        return cache[k]

    def estimate_at(k: int, t: float, l_min: float) -> Optional[HrEstimate]:
        res = window_result(k)
        if res.peaks is None or len(res.peaks) < 2:
            return None
        try:
            return count_hr(res.peaks, cfg, t, l_min=l_min)
        except NoEstimateError:
            return None

    n_steps = int(math.floor(duration / cfg.cadence + 1e-9))
    grid = np.arange(1, n_steps + 1) * cfg.cadence

    def sweep(lmin_at: Callable[[float], float]) -> list[HrPoint]:
        k = 0
        points: list[HrPoint] = []
        last_valid: Optional[float] = None
        for t in grid:
            l_min = lmin_at(float(t))
            est = estimate_at(k, t, l_min)
            # Advance W_a while the (nominal) left endpoint of W_b has
            # entered the next placement's range, or the window has gone
            # stale (no countable peak near t).
            while k < k_max:
                left = est.window_start if est is not None else t - l_min
                stale = est is not None and (t - est.window_end) > _STALE_LIMIT_S
                if left >= (k + 1) * cfg.stride or stale:
                    k += 1
                    est = estimate_at(k, t, l_min)
                else:
                    break
            wa_start = k * cfg.stride
            wa_end = wa_start + cfg.l_a
            if est is None:
                if last_valid is None:
                    continue  # nothing to carry yet; series starts later
                points.append(
                    HrPoint(float(t), last_valid, math.nan, FLAG_CARRY, k,
                            wa_start, wa_end, math.nan, math.nan, l_min)
                )
                continue
            hr = est.hr_bpm
            flag = FLAG_OK
            if hr < HR_MIN_BPM or hr > HR_MAX_BPM:
                hr = min(max(hr, HR_MIN_BPM), HR_MAX_BPM)
                flag = FLAG_CLAMPED
            last_valid = hr
            points.append(
                HrPoint(float(t), hr, est.l_b, flag, k, wa_start, wa_end,
                        est.window_start, est.window_end, l_min)
            )
        return points

    first = sweep(lambda t: cfg.l_min)
    if not first:
        raise DegradedQualityError("no window produced a usable HR estimate")
    first_times = np.array([p.time for p in first])
    first_hr = np.array([p.hr_bpm for p in first])

    def adapted_lmin(t: float) -> float:
        i = int(np.argmin(np.abs(first_times - t)))
        return adapt_lmin(float(first_hr[i]), cfg)

    points = sweep(adapted_lmin)
    for p in points:
        i = int(np.argmin(np.abs(first_times - p.time)))
        if abs(first_times[i] - p.time) <= cfg.cadence / 2 + 1e-9:
            p.hr_first_pass = float(first_hr[i])
    n_carry = sum(1 for p in points if p.flag == FLAG_CARRY)
    if points and n_carry > carry_limit * len(points):
        raise DegradedQualityError(
            f"{n_carry}/{len(points)} output points carried forward "
            f"(limit {carry_limit:.0%})"
        )
    return HrSeries(points=points, cadence=cfg.cadence, window_results=cache)


@dataclass
class HrrReport:
    """Recovery summary over the observation window."""

    initial_hr: float
    hr_at_60s: float
    hrr_60: float
    series: HrSeries
    mean_abs_error: Optional[float] = None
    n_points: int = 0
    n_carry: int = 0

    def as_dict(self) -> dict:
        d = {
            "initial_hr_bpm": self.initial_hr,
            "hr_at_60s_bpm": self.hr_at_60s,
            "hrr_60_bpm": self.hrr_60,
            "n_points": self.n_points,
            "n_carry": self.n_carry,
        }
        if self.mean_abs_error is not None:
            d["mean_abs_error_bpm"] = self.mean_abs_error
        return d


def build_report(
    series: HrSeries,
    truth: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> HrrReport:
    """Summarize a recovery run: initial HR, HR at 60 s, and their difference.

    ``truth`` is an instantaneous-HR trajectory; when given, the mean
    absolute error over all emitted points (carried ones included) is
    recorded.
    """
    if not series.points:
        raise ValueError("empty HR series")
    if series.times[-1] < 60.0 - series.cadence / 2:
        raise ValueError(
            f"series must span at least 60 s, last point at {series.times[-1]:.1f} s"
        )
    initial = next(p.hr_bpm for p in series.points if p.flag != FLAG_CARRY)
    at60 = series.value_at(60.0).hr_bpm
    mae = None
    if truth is not None:
        truth_hr = np.asarray(truth(series.times), dtype=float)
        mae = float(np.mean(np.abs(truth_hr - series.hr_bpm)))
    return HrrReport(
        initial_hr=float(initial),
        hr_at_60s=float(at60),
        hrr_60=float(initial - at60),
        series=series,
        mean_abs_error=mae,
        n_points=len(series.points),
        n_carry=sum(1 for p in series.points if p.flag == FLAG_CARRY),
    )

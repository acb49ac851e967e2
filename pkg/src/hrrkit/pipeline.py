"""End-to-end composition: preprocess, decompose, select, count, report."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .config import PipelineConfig
from .errors import AlphaInfeasibleError, DegenerateSignalError, NoHeartbeatError
from .hr_estimate import (
    HrrReport,
    HrSeries,
    StageFn,
    WindowResult,
    build_report,
    condition_heartbeat,
    detect_peaks,
    run_composite_windows,
)
from .mode_select import classify_modes
from .preprocess import bandpass, difference
from .signal_model import ChestMotionTrace
from .vmd import energy_loss, mode_correlation_max, select_alpha


def make_window_stage(cfg: PipelineConfig) -> StageFn:
    """Build the per-window stage: adaptive decomposition through peak detection.

    When no penalty factor satisfies both gates, the least-violating
    decomposition is used and the window is flagged ``gates_relaxed``
    rather than dropped, so the output curve stays continuous.
    """
    gates = cfg.gates()
    select_cfg = cfg.mode_select_config()

    def stage(segment: np.ndarray, fs: float, t0: float) -> WindowResult:
        if not np.any(segment):
            return WindowResult(t0, None, status="no_heartbeat")
        status = "ok"
        try:
            alpha, ms = select_alpha(
                segment,
                fs,
                cfg.k_modes,
                gates=gates,
                alpha_range=(cfg.alpha_lo, cfg.alpha_hi),
                ratio_tol=cfg.alpha_ratio_tol,
                params=cfg.vmd_params(),
            )
        except AlphaInfeasibleError as exc:
            if exc.best_modeset is None:
                return WindowResult(t0, None, status="no_heartbeat")
            alpha, ms = exc.best_alpha, exc.best_modeset
            status = "gates_relaxed"
        r_max = mode_correlation_max(ms)
        p = energy_loss(ms)
        try:
            labels, hb_index = classify_modes(ms, select_cfg)
        except NoHeartbeatError:
            labels, hb_index = None, None
        table = []
        if labels is not None:
            total_energy = max(ms.input_energy, 1e-300)
            for lb in labels:
                table.append(
                    {
                        "window_start_s": t0,
                        "mode_idx": lb.mode_index,
                        "omega_hz": float(ms.center_freqs[lb.mode_index]),
                        "energy_share": lb.energy / total_energy,
                        "label": lb.label,
                        "peak_freq_hz": lb.peak_freq,
                        "energy": lb.energy,
                        "alpha": alpha,
                        "r_max": r_max,
                        "p": p,
                        "coincident": lb.label == "heartbeat" and lb.harmonic_order is not None,
                    }
                )
        if hb_index is None:
            return WindowResult(t0, None, alpha=alpha, mode_table=table, status="no_heartbeat")
        try:
            conditioned = condition_heartbeat(
                ms.modes[hb_index],
                fs,
                smooth_window=cfg.smooth_window,
                envelope_floor=cfg.envelope_floor,
            )
        except DegenerateSignalError:
            return WindowResult(t0, None, alpha=alpha, mode_table=table, status="degenerate")
        train = detect_peaks(conditioned, fs).shifted(t0)
        return WindowResult(t0, train, alpha=alpha, mode_table=table, status=status)

    return stage


def preprocess_trace(trace: ChestMotionTrace, cfg: PipelineConfig) -> ChestMotionTrace:
    """Vital-band filter followed by the first difference."""
    return difference(bandpass(trace, cfg.filter_spec()))


def estimate_trace(
    trace: ChestMotionTrace,
    cfg: Optional[PipelineConfig] = None,
) -> tuple[HrSeries, HrrReport]:
    """Run the full pipeline on a displacement trace and build the report.

    Ground truth attached to the trace (synthetic runs) is scored into the
    report's mean absolute error.
    """
    cfg = cfg or PipelineConfig()
    if trace.unit != "mm":
        raise ValueError("estimate_trace expects a displacement trace in mm")
    prepared = preprocess_trace(trace, cfg)
    series = run_composite_windows(
        prepared, cfg.window_config(), make_window_stage(cfg), carry_limit=cfg.carry_limit
    )
    truth = None
    gt = trace.ground_truth
    if gt is not None and gt.heartbeat is not None:
        truth = gt.heartbeat.rate_trajectory
    report = build_report(series, truth=truth)
    return series, report

"""File formats: trace CSV with metadata sidecar, radar-cube binary, HR
series CSV, reports, and diagnostic mode dumps.

All writers use fixed numeric formats so identical inputs produce
byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .hr_estimate import HrrReport, HrSeries
from .radar import RadarCube
from .signal_model import (
    ChestMotionTrace,
    ConstantRate,
    ExponentialRecovery,
    GroundTruth,
    HeartbeatModel,
    LinearRamp,
    RespirationModel,
    WaveformShape,
)

TRACE_HEADER = "time_s,displacement_mm"
HR_HEADER = "time_s,hr_bpm,l_b_s,flag"
MODES_HEADER = (
    "window_start_s,mode_idx,omega_hz,energy_share,label,peak_freq_hz,energy"
)
_CUBE_MAGIC = "hrrkit-cube v1"


def meta_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".meta")


def _trajectory_str(traj) -> str:
    if isinstance(traj, ExponentialRecovery):
        return f"exponential_recovery({traj.hr_initial},{traj.hr_final},{traj.time_constant})"
    if isinstance(traj, ConstantRate):
        return f"constant({traj.bpm})"
    if isinstance(traj, LinearRamp):
        return f"linear({traj.start_bpm},{traj.end_bpm},{traj.t_end})"
    return "custom"


def _parse_trajectory(text: str):
    name, _, args = text.partition("(")
    values = [float(v) for v in args.rstrip(")").split(",")] if args else []
    if name == "exponential_recovery":
        return ExponentialRecovery(*values)
    if name == "constant":
        return ConstantRate(*values)
    if name == "linear":
        return LinearRamp(*values)
    return None


def write_trace(trace: ChestMotionTrace, path: str | Path) -> None:
    """Trace CSV plus a key=value sidecar recording models, seed and rate."""
    path = Path(path)
    lines = [TRACE_HEADER]
    for i, v in enumerate(trace.samples):
        lines.append(f"{i / trace.sample_rate:.6f},{v:.12e}")
    path.write_text("\n".join(lines) + "\n")

    meta = {
        "sample_rate": trace.sample_rate,
        "duration": trace.duration,
        "unit": trace.unit,
    }
    gt = trace.ground_truth
    if gt is not None:
        meta["seed"] = gt.seed
        meta["noise_std"] = gt.noise_std
        if gt.respiration is not None:
            meta["resp_fundamental_freq"] = gt.respiration.fundamental_freq
            meta["resp_harmonic_amplitudes"] = ",".join(
                repr(a) for a in gt.respiration.harmonic_amplitudes
            )
            meta["resp_phase_offset"] = gt.respiration.phase_offset
        if gt.heartbeat is not None:
            meta["heart_amplitude"] = gt.heartbeat.amplitude
            meta["heart_waveform"] = gt.heartbeat.waveform_shape.value
            meta["heart_trajectory"] = _trajectory_str(gt.heartbeat.rate_trajectory)
    meta_path(path).write_text(
        "".join(f"{k}={v}\n" for k, v in meta.items())
    )


def read_trace(path: str | Path) -> ChestMotionTrace:
    """Read a trace CSV; the sidecar, when present, restores rate and truth."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != TRACE_HEADER:
        raise ValueError(f"{path}:1: expected header {TRACE_HEADER!r}")
    times, values = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            t_str, v_str = line.split(",")
            times.append(float(t_str))
            values.append(float(v_str))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed row {line!r}") from exc
    if len(values) < 2:
        raise ValueError(f"{path}: needs at least 2 samples")

    meta: dict[str, str] = {}
    mp = meta_path(path)
    if mp.exists():
        for line in mp.read_text().splitlines():
            if "=" in line:
                k, _, v = line.partition("=")
                meta[k.strip()] = v.strip()
    sample_rate = float(meta.get("sample_rate", 0.0)) or 1.0 / (times[1] - times[0])
    unit = meta.get("unit", "mm")

    ground_truth: Optional[GroundTruth] = None
    if "seed" in meta:
        resp = None
        if "resp_fundamental_freq" in meta:
            resp = RespirationModel(
                fundamental_freq=float(meta["resp_fundamental_freq"]),
                harmonic_amplitudes=tuple(
                    float(a) for a in meta["resp_harmonic_amplitudes"].split(",")
                ),
                phase_offset=float(meta.get("resp_phase_offset", 0.0)),
            )
        heart = None
        if "heart_amplitude" in meta:
            traj = _parse_trajectory(meta.get("heart_trajectory", "custom"))
            if traj is not None:
                heart = HeartbeatModel(
                    rate_trajectory=traj,
                    amplitude=float(meta["heart_amplitude"]),
                    waveform_shape=WaveformShape(meta["heart_waveform"]),
                )
        ground_truth = GroundTruth(
            respiration=resp,
            heartbeat=heart,
            noise_std=float(meta.get("noise_std", 0.0)),
            seed=int(meta["seed"]),
        )
    return ChestMotionTrace(
        samples=np.array(values),
        sample_rate=sample_rate,
        unit=unit,
        ground_truth=ground_truth,
    )


def write_cube(cube: RadarCube, path: str | Path) -> None:
    """Binary cube: text header, then little-endian float32 interleaved I/Q."""
    path = Path(path)
    header = (
        f"{_CUBE_MAGIC}\n"
        f"frames={cube.n_frames}\n"
        f"samples_per_chirp={cube.iq.shape[1]}\n"
        f"frame_rate={cube.frame_rate!r}\n"
        f"bin_size={cube.bin_size!r}\n"
        f"end-header\n"
    )
    flat = np.empty(cube.iq.size * 2, dtype="<f4")
    flat[0::2] = cube.iq.real.ravel()
    flat[1::2] = cube.iq.imag.ravel()
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(flat.tobytes())


def read_cube(path: str | Path) -> RadarCube:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii").strip()
        if magic != _CUBE_MAGIC:
            raise ValueError(f"{path}: not a radar cube file (got {magic!r})")
        fields = {}
        while True:
            line = fh.readline().decode("ascii").strip()
            if line == "end-header":
                break
            if not line or "=" not in line:
                raise ValueError(f"{path}: malformed cube header line {line!r}")
            k, _, v = line.partition("=")
            fields[k] = v
        payload = np.frombuffer(fh.read(), dtype="<f4")
    frames = int(fields["frames"])
    samples = int(fields["samples_per_chirp"])
    if payload.size != frames * samples * 2:
        raise ValueError(
            f"{path}: payload holds {payload.size} floats, expected "
            f"{frames * samples * 2}"
        )
    iq = payload[0::2].astype(float) + 1j * payload[1::2].astype(float)
    return RadarCube(
        iq=iq.reshape(frames, samples),
        frame_rate=float(fields["frame_rate"]),
        bin_size=float(fields["bin_size"]),
        fft_length=samples,
    )


def write_hr_series(series: HrSeries, path: str | Path) -> None:
    lines = [HR_HEADER]
    for p in series.points:
        lb = "" if np.isnan(p.l_b) else f"{p.l_b:.4f}"
        lines.append(f"{p.time:.3f},{p.hr_bpm:.4f},{lb},{p.flag}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_report(report: HrrReport, path: str | Path) -> None:
    """Report as key=value text plus a .json twin."""
    path = Path(path)
    d = report.as_dict()
    path.write_text("".join(f"{k}={v}\n" for k, v in sorted(d.items())))
    path.with_suffix(".json").write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")


def write_mode_dump(series: HrSeries, path: str | Path) -> None:
    """Per-window mode table: center frequency, energy share, and label."""
    lines = [MODES_HEADER]
    for k in sorted(series.window_results):
        for row in series.window_results[k].mode_table:
            lines.append(
                f"{row['window_start_s']:.3f},{row['mode_idx']},"
                f"{row['omega_hz']:.4f},{row['energy_share']:.6e},"
                f"{row['label']},{row['peak_freq_hz']:.4f},{row['energy']:.6e}"
            )
    Path(path).write_text("\n".join(lines) + "\n")

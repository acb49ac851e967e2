"""Flat run configuration: defaults, key=value parsing, validation, echo."""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Optional

from .errors import ConfigError
from .mode_select import ModeSelectConfig
from .preprocess import FilterSpec
from .hr_estimate import WindowConfig
from .vmd import GateThresholds, VmdParams


@dataclass
class PipelineConfig:
    """Every stage knob of the estimation pipeline, flattened for the CLI."""

    # band-pass
    pass_low: float = 0.2
    pass_high: float = 3.4
    # decomposition
    k_modes: int = 6
    alpha_lo: float = 10.0
    alpha_hi: float = 1e6
    alpha_ratio_tol: float = 1.1
    tau: float = 0.0
    vmd_tolerance: float = 1e-7
    vmd_max_iters: int = 500
    mirror_frac: float = 0.1
    # gates
    mu1: float = 0.2
    mu2: float = 1e-4
    # mode selection
    resp_lo: float = 0.167
    resp_hi: float = 0.7
    hr_lo: float = 0.6
    hr_hi: float = 3.4
    harmonic_tol: float = 0.08
    noise_prominence: float = 4.0
    noise_oob_fraction: float = 0.5
    peak_band_halfwidth: float = 0.3
    rel_peak_floor: float = 0.2
    # HR estimation
    l_min: float = 5.0
    l_b_max: float = 8.0
    l_min_lo: float = 3.0
    l_min_hi: float = 7.0
    cadence: float = 1.0
    smooth_window: float = 0.12
    envelope_floor: float = 0.1
    carry_limit: float = 0.5

    def validate(self) -> "PipelineConfig":
        # Constructing the stage objects runs their invariant checks.
        try:
            self.filter_spec()
            self.vmd_params()
            self.gates()
            self.mode_select_config()
            self.window_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0 < self.carry_limit <= 1:
            raise ConfigError(f"carry_limit must be in (0, 1], got {self.carry_limit}")
        if not 0 < self.alpha_lo < self.alpha_hi:
            raise ConfigError(
                f"require 0 < alpha_lo < alpha_hi, got ({self.alpha_lo}, {self.alpha_hi})"
            )
        if self.alpha_ratio_tol <= 1.0:
            raise ConfigError(f"alpha_ratio_tol must be > 1, got {self.alpha_ratio_tol}")
        return self

    def filter_spec(self) -> FilterSpec:
        return FilterSpec(pass_low=self.pass_low, pass_high=self.pass_high)

    def vmd_params(self, alpha: float = 2000.0) -> VmdParams:
        return VmdParams(
            K=self.k_modes,
            alpha=alpha,
            tau=self.tau,
            tolerance=self.vmd_tolerance,
            max_iters=self.vmd_max_iters,
            mirror_frac=self.mirror_frac,
        )

    def gates(self) -> GateThresholds:
        return GateThresholds(mu1=self.mu1, mu2=self.mu2)

    def mode_select_config(self) -> ModeSelectConfig:
        return ModeSelectConfig(
            respiration_band=(self.resp_lo, self.resp_hi),
            hr_band=(self.hr_lo, self.hr_hi),
            harmonic_tol=self.harmonic_tol,
            noise_prominence=self.noise_prominence,
            noise_oob_fraction=self.noise_oob_fraction,
            peak_band_halfwidth=self.peak_band_halfwidth,
            rel_peak_floor=self.rel_peak_floor,
        )

    def window_config(self) -> WindowConfig:
        return WindowConfig(
            l_min=self.l_min,
            l_b_max=self.l_b_max,
            l_min_bounds=(self.l_min_lo, self.l_min_hi),
            cadence=self.cadence,
        )

    def echo(self) -> str:
        """Fully-resolved key=value dump, reproducing this config when re-read."""
        lines = [f"{f.name}={getattr(self, f.name)!r}".replace("'", "") for f in fields(self)]
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(key: str, raw: str):
    if key not in _FIELD_TYPES:
        valid = ", ".join(sorted(_FIELD_TYPES))
        raise ConfigError(f"unknown config key {key!r}; valid keys: {valid}")
    target = _FIELD_TYPES[key]
    try:
        if target in ("int", int):
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key}={raw!r} as a number") from exc


def parse_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, str]] = None,
) -> PipelineConfig:
    """Resolve a config from defaults, then a key=value file, then overrides."""
    values: dict = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            values[key] = _coerce(key, raw)
    if overrides:
        for key, raw in overrides.items():
            values[key] = _coerce(key, str(raw))
    return PipelineConfig(**values).validate()

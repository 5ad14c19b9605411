"""Effective run configuration, shared by every subcommand."""

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

import config
from errors import ConfigurationError
from quantizer.state_space import check_movement_rate, default_movement_rate, preset_bounds
from respiration.records import RateBounds, WindowConfig


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # analysis windows
    window_s: float = Field(default=config.WINDOW_S, gt=0)
    overlap: float = Field(default=config.OVERLAP, ge=0, lt=1)
    eta_uv: float = Field(default=config.ETA_UV, gt=0)

    # RR bounds; r_low / r_high override the preset
    preset: Literal["newborn", "adult"] = "newborn"
    r_low: float | None = Field(default=None, gt=0)
    r_high: float | None = Field(default=None, gt=0)
    # None picks max(10 Hz, 10 x r_high)
    r_movement: float | None = Field(default=None, gt=0)
    apnea_rate_hz: float = Field(default=config.APNEA_RATE_HZ, gt=0)
    amp_threshold: float | None = Field(default=None, ge=0)

    # model
    n_states: int = Field(default=config.N_STATES, ge=2)
    include_apnea: bool = True
    include_movement: bool = True

    seed: int = Field(default=config.DEFAULT_SEED, ge=0, lt=2**64)

    # evaluation
    roc_thresholds: int = Field(default=config.ROC_THRESHOLDS, ge=1)
    tolerance: float = Field(default=config.TOLERANCE_FRACTION, gt=0)
    min_event_s: float = Field(default=config.MIN_EVENT_S, ge=0)

    @model_validator(mode="after")
    def check_bounds(self):
        bounds = self.bounds()
        if not self.apnea_rate_hz < bounds.r_low:
            raise ValueError(f"apnea_rate_hz must stay below r_low={bounds.r_low}")
        if self.include_movement:
            check_movement_rate(bounds)
        return self

    def bounds(self) -> RateBounds:
        preset = preset_bounds(self.preset)
        r_low = self.r_low if self.r_low is not None else preset.r_low
        r_high = self.r_high if self.r_high is not None else preset.r_high
        r_movement = self.r_movement if self.r_movement is not None else default_movement_rate(r_high)
        return RateBounds(r_low, r_high, r_movement)

    def window_config(self, sample_rate: float) -> WindowConfig:
        return WindowConfig.from_seconds(self.window_s, self.overlap, sample_rate)

    def echo(self, **run) -> dict:
        """Header comments that let an output file reproduce its run. `run`
        carries the command arguments that live outside the config."""
        return {"config": self.model_dump_json(), **run}

    @classmethod
    def resolve(cls, flags: dict, config_path: str | Path | None = None) -> "PipelineConfig":
        """Command-line flags first, then keys from the JSON file on top."""
        values = {k: v for k, v in flags.items() if v is not None}
        if config_path is not None:
            try:
                overrides = json.loads(Path(config_path).read_text())
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{config_path}: not valid JSON ({exc})") from None
            if not isinstance(overrides, dict):
                raise ConfigurationError(f"{config_path}: expected a JSON object")
            values.update(overrides)
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigurationError(f"invalid configuration: {exc}") from None

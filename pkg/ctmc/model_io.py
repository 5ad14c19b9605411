"""Model JSON documents, schedule CSV and the manikin servo command list."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, ValidationError

import config
from ctmc.generator import GeneratorMatrix, StationaryDistribution, stationary
from ctmc.simulate import SojournSchedule
from errors import DataFormatError, InsufficientDataError
from quantizer.state_space import StateSpace, preset_bounds
from respiration.csv_io import fmt, parse_float, read_commented_csv, write_commented_csv
from respiration.records import RateBounds

logger = logging.getLogger(__name__)

# printed generators carry six decimals, printed pi five
LOAD_ROW_SUM_TOL = 1e-4
PI_TOL = 5e-4

SCHEDULE_HEADER = ["state_index", "rate_hz", "sojourn_s", "jump_time_s"]
SERVO_HEADER = ["state_index", "command_rate_hz", "duration_s"]


class ModelMeta(BaseModel):
    source: str | None = None
    fit_step_s: float | None = None
    seed: int | None = None
    unvisited_states: list[int] = []
    # effective run configuration of the command that wrote the model
    config: dict[str, Any] | None = None


class ModelDocument(BaseModel):
    rates_hz: list[float]
    has_apnea: bool
    has_movement: bool
    lambda_per_s: list[list[float]]
    pi: list[float]
    bounds_hz: dict[str, float] | None = None
    meta: ModelMeta = Field(default_factory=ModelMeta)


@dataclass(frozen=True)
class BreathingModel:
    generator: GeneratorMatrix
    state_space: StateSpace
    stationary: StationaryDistribution
    meta: ModelMeta


def save_model(path: str | Path, model: BreathingModel) -> None:
    bounds = model.state_space.bounds
    doc = ModelDocument(
        rates_hz=model.state_space.rates.tolist(),
        has_apnea=model.state_space.has_apnea,
        has_movement=model.state_space.has_movement,
        lambda_per_s=model.generator.entries.tolist(),
        pi=model.stationary.probabilities.tolist(),
        bounds_hz={"r_low": bounds.r_low, "r_high": bounds.r_high, "r_movement": bounds.r_movement},
        meta=model.meta.model_copy(update={"unvisited_states": sorted(model.generator.unvisited)}),
    )
    # json.dumps writes floats with their shortest round-trip repr
    Path(path).write_text(json.dumps(doc.model_dump(), indent=2) + "\n")


def _document_bounds(doc: ModelDocument, path) -> RateBounds:
    """Stored bounds, or the newborn preset around the document's own sentinel."""
    if doc.bounds_hz is None:
        r_movement = doc.rates_hz[-1] if doc.has_movement and doc.rates_hz else None
        return preset_bounds("newborn", r_movement)
    try:
        return RateBounds(doc.bounds_hz["r_low"], doc.bounds_hz["r_high"], doc.bounds_hz["r_movement"])
    except KeyError as exc:
        raise DataFormatError(f"{path}: bounds_hz lacks {exc}") from None


def load_model(path: str | Path) -> BreathingModel:
    """Read a model document. pi is recomputed from the generator; a stored
    pi that disagrees beyond print rounding is reported and replaced."""
    try:
        doc = ModelDocument.model_validate(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise DataFormatError(f"{path}: not a model document ({exc})") from None
    ss = StateSpace(np.asarray(doc.rates_hz), doc.has_apnea, doc.has_movement, _document_bounds(doc, path))
    gen = GeneratorMatrix(
        np.asarray(doc.lambda_per_s), frozenset(doc.meta.unvisited_states), row_sum_tol=LOAD_ROW_SUM_TOL
    )
    if gen.n_states != ss.n_states:
        raise DataFormatError(f"{path}: {gen.n_states}-state generator for {ss.n_states} rates")
    pi = stationary(gen, allow_partial=bool(gen.unvisited))
    stored = np.asarray(doc.pi, dtype=float)
    if stored.shape != pi.probabilities.shape:
        raise DataFormatError(f"{path}: pi holds {stored.size} entries for {ss.n_states} states")
    drift = float(np.max(np.abs(stored - pi.probabilities)))
    if drift > PI_TOL:
        logger.warning("%s: stored pi is %.2g away from the generator's, using the latter", path, drift)
    return BreathingModel(gen, ss, pi, doc.meta)


def save_schedule(path: str | Path, schedule: SojournSchedule, comments: dict | None = None) -> None:
    comments = ({} if schedule.seed is None else {"seed": schedule.seed}) | (comments or {})
    rows = (
        (int(s), fmt(r), fmt(tau), fmt(t))
        for s, r, tau, t in zip(schedule.states, schedule.rates, schedule.sojourns, schedule.jump_times)
    )
    write_commented_csv(path, SCHEDULE_HEADER, rows, comments)


def load_schedule(path: str | Path, ss: StateSpace) -> SojournSchedule:
    meta, rows = read_commented_csv(path)
    if not rows or [c.strip() for c in rows[0][1]] != SCHEDULE_HEADER:
        raise DataFormatError(f"{path}: expected header {','.join(SCHEDULE_HEADER)}", rows[0][0] if rows else None)
    states, sojourns = [], []
    for line_no, row in rows[1:]:
        if len(row) != 4:
            raise DataFormatError(f"expected 4 columns, got {len(row)}", line_no)
        try:
            states.append(int(row[0]))
        except ValueError:
            raise DataFormatError(f"cannot parse state_index {row[0]!r}", line_no) from None
        sojourns.append(parse_float(row[2], line_no, "sojourn_s"))
    if not states:
        raise InsufficientDataError(f"{path} holds no sojourns")
    seed = int(meta["seed"]) if "seed" in meta else None
    return SojournSchedule(states, sojourns, ss, seed)


def export_servo_schedule(
    schedule: SojournSchedule,
    min_rate: float = config.SERVO_MIN_RATE_HZ,
    max_rate: float = config.SERVO_MAX_RATE_HZ,
) -> list[tuple[int, float, float]]:
    """(state, commanded rate, duration) per sojourn. The servo cannot stop,
    so apnea sojourns run at its minimum reachable rate."""
    commands = []
    for state, rate, tau in zip(schedule.states, schedule.rates, schedule.sojourns):
        command = min_rate if rate == 0 else float(np.clip(rate, min_rate, max_rate))
        commands.append((int(state), command, float(tau)))
    return commands


def save_servo_schedule(path: str | Path, schedule: SojournSchedule, **limits) -> None:
    rows = ((s, fmt(r), fmt(d)) for s, r, d in export_servo_schedule(schedule, **limits))
    write_commented_csv(path, SERVO_HEADER, rows)

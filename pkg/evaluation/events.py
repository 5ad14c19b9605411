"""Apnea events on a schedule and on label timelines."""

from dataclasses import dataclass

import numpy as np

import config
from ctmc.simulate import SojournSchedule
from errors import InvalidInputError, NotApplicableError
from evaluation.detection import LabeledTimeline


def positive_runs(labels) -> list[tuple[int, int]]:
    """Half-open [start, stop) index ranges of consecutive True labels."""
    padded = np.concatenate(([False], np.asarray(labels, dtype=bool), [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2].tolist(), edges[1::2].tolist()))


def suppress_short_runs(labels, step_s: float, min_event_s: float) -> np.ndarray:
    """Relabel positive runs lasting less than min_event_s as negative."""
    out = np.array(labels, dtype=bool)
    for start, stop in positive_runs(out):
        if (stop - start) * step_s < min_event_s:
            out[start:stop] = False
    return out


def _apnea_mask(schedule: SojournSchedule) -> np.ndarray:
    ss = schedule.state_space
    if not ss.has_apnea:
        raise NotApplicableError("the state space has no apnea state")
    return schedule.states == ss.apnea_index


def truth_timeline(
    schedule: SojournSchedule,
    step_s: float,
    origin_s: float,
    length: int,
    min_event_s: float = config.MIN_EVENT_S,
) -> LabeledTimeline:
    """Ground truth on the grid origin + j * step: positive inside apnea
    sojourns lasting at least min_event_s."""
    if length < 1:
        raise InvalidInputError(f"timeline length must be positive, got {length}")
    qualifying = _apnea_mask(schedule) & (schedule.sojourns >= min_event_s)
    times = origin_s + step_s * np.arange(length)
    idx = np.minimum(np.searchsorted(schedule.jump_times, times, side="right"), len(schedule) - 1)
    return LabeledTimeline(step_s, qualifying[idx], origin_s)


@dataclass(frozen=True)
class ApneaEventSummary:
    pauses: int  # apnea sojourns shorter than min_event_s
    apneas: int
    severe_apneas: int
    total_apnea_s: float
    mean_apnea_s: float | None
    max_apnea_s: float | None


def apnea_event_summary(
    schedule: SojournSchedule,
    min_event_s: float = config.MIN_EVENT_S,
    severe_s: float = config.SEVERE_EVENT_S,
) -> ApneaEventSummary:
    durations = schedule.sojourns[_apnea_mask(schedule)]
    apneas = durations[durations >= min_event_s]
    return ApneaEventSummary(
        pauses=int(np.count_nonzero(durations < min_event_s)),
        apneas=int(apneas.size),
        severe_apneas=int(np.count_nonzero(apneas >= severe_s)),
        total_apnea_s=float(apneas.sum()),
        mean_apnea_s=float(apneas.mean()) if apneas.size else None,
        max_apnea_s=float(apneas.max()) if apneas.size else None,
    )


def timeline_events(timeline: LabeledTimeline) -> list[tuple[float, float]]:
    """(start_s, duration_s) of each positive run."""
    return [
        (timeline.origin_s + start * timeline.step_s, (stop - start) * timeline.step_s)
        for start, stop in positive_runs(timeline.labels)
    ]

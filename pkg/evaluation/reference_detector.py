import logging

import config
from errors import InvalidInputError
from evaluation.detection import LabeledTimeline, ScoreTimeline
from evaluation.events import suppress_short_runs
from respiration.records import PneumogramRecord, RateBounds, WindowConfig
from respiration.rr_trajectory import analyze_windows

logger = logging.getLogger(__name__)

THRESHOLD_FRACTION = 0.5


def reference_apnea_detector(
    record: PneumogramRecord,
    cfg: WindowConfig,
    eta: float,
    bounds: RateBounds,
    threshold: float | None = None,
    min_event_s: float = config.MIN_EVENT_S,
) -> tuple[ScoreTimeline, LabeledTimeline]:
    """Amplitude-gate apnea detector on interlaced windows.

    The score is the breathing-band peak amplitude, so low scores mean apnea
    (evaluate its ROC with direction "less"). A window is positive when its
    score is at most `threshold` (default: half the median amplitude of
    movement-free windows) and it is not a movement window. Positive runs
    shorter than `min_event_s` are respiratory pauses and are dropped.
    """
    if min_event_s < 0:
        raise InvalidInputError(f"min_event_s must be non-negative, got {min_event_s}")
    analysis = analyze_windows(record, cfg, eta, bounds)
    if threshold is None:
        threshold = THRESHOLD_FRACTION * analysis.median_breathing_amplitude()
    raw = (analysis.amps <= threshold) & ~analysis.movement
    labels = suppress_short_runs(raw, analysis.window_step_s, min_event_s)
    logger.info(
        "detector: %d of %d windows positive (threshold %.4g, %d dropped as pauses)",
        int(labels.sum()),
        labels.size,
        threshold,
        int(raw.sum() - labels.sum()),
    )
    scores = ScoreTimeline(analysis.window_step_s, analysis.amps, analysis.origin_time_s)
    return scores, LabeledTimeline(analysis.window_step_s, labels, analysis.origin_time_s)

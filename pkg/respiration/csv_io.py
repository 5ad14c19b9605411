"""Pneumogram and RR-trajectory CSV files.

Pneumogram: header `time_s,value_uV`, uniform strictly increasing time, or
a single value column preceded by a `# fs_hz=<value>` comment.
Trajectory: header `time_s,rr_hz` with `# window_step_s=` and
`# origin_time_s=` comments.
"""

import csv
from pathlib import Path

import numpy as np

from errors import DataFormatError, InsufficientDataError
from respiration.records import PneumogramRecord, RrTrajectory

UNIFORMITY_RTOL = 1e-6


def fmt(value) -> str:
    """Shortest round-trip text for a float."""
    return repr(float(value))


def read_commented_csv(path: str | Path):
    """Split a file into `# key=value` metadata and (line_number, row) data rows."""
    path = Path(path)
    meta: dict[str, str] = {}
    rows: list[tuple[int, list[str]]] = []
    with path.open(newline="") as handle:
        for line_no, line in enumerate(handle, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                key, sep, value = text[1:].strip().partition("=")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            rows.append((line_no, next(csv.reader([text]))))
    return meta, rows


def parse_float(text: str, line_no: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(f"cannot parse {column} value {text!r}", line_no) from None
    if not np.isfinite(value):
        raise DataFormatError(f"non-finite {column} value {text!r}", line_no)
    return value


def write_commented_csv(path: str | Path, header: list[str], rows, comments: dict | None = None) -> None:
    with Path(path).open("w", newline="") as handle:
        for key, value in (comments or {}).items():
            handle.write(f"# {key}={value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def load_pneumogram(path: str | Path) -> PneumogramRecord:
    meta, rows = read_commented_csv(path)
    if not rows:
        raise InsufficientDataError(f"{path} holds no samples")
    first_line, first = rows[0]
    if [cell.strip() for cell in first] == ["time_s", "value_uV"]:
        body = rows[1:]
        if len(body) < 2:
            raise InsufficientDataError(f"{path} needs at least two samples to infer f_s")
        times, values = [], []
        for line_no, row in body:
            if len(row) != 2:
                raise DataFormatError(f"expected 2 columns, got {len(row)}", line_no)
            times.append(parse_float(row[0], line_no, "time_s"))
            values.append(parse_float(row[1], line_no, "value_uV"))
        times = np.asarray(times)
        steps = np.diff(times)
        dt = (times[-1] - times[0]) / (times.size - 1)
        bad = np.flatnonzero((steps <= 0) | (np.abs(steps - dt) > UNIFORMITY_RTOL * dt))
        if bad.size:
            raise DataFormatError("time column is not uniform and strictly increasing", body[bad[0] + 1][0])
        return PneumogramRecord(np.asarray(values), 1.0 / dt)
    if "fs_hz" not in meta:
        raise DataFormatError("expected header 'time_s,value_uV' or a '# fs_hz=' comment", first_line)
    fs = parse_float(meta["fs_hz"], 0, "fs_hz")
    values = []
    for line_no, row in rows:
        if len(row) != 1:
            raise DataFormatError(f"expected 1 column, got {len(row)}", line_no)
        values.append(parse_float(row[0], line_no, "value_uV"))
    return PneumogramRecord(np.asarray(values), fs)


def save_pneumogram(path: str | Path, record: PneumogramRecord, comments: dict | None = None) -> None:
    times = np.arange(len(record)) * record.sample_interval
    write_commented_csv(
        path,
        ["time_s", "value_uV"],
        ((fmt(t), fmt(v)) for t, v in zip(times, record.samples)),
        comments,
    )


def save_trajectory(path: str | Path, traj: RrTrajectory, comments: dict | None = None) -> None:
    meta = {"window_step_s": fmt(traj.window_step_s), "origin_time_s": fmt(traj.origin_time_s)}
    if traj.window_s is not None:
        meta["window_s"] = fmt(traj.window_s)
    meta.update(comments or {})
    write_commented_csv(path, ["time_s", "rr_hz"], ((fmt(t), fmt(v)) for t, v in zip(traj.times, traj.values)), meta)


def load_trajectory(path: str | Path) -> RrTrajectory:
    meta, rows = read_commented_csv(path)
    if not rows or [c.strip() for c in rows[0][1]] != ["time_s", "rr_hz"]:
        raise DataFormatError(f"{path}: expected header 'time_s,rr_hz'", rows[0][0] if rows else None)
    times, values = [], []
    for line_no, row in rows[1:]:
        if len(row) != 2:
            raise DataFormatError(f"expected 2 columns, got {len(row)}", line_no)
        times.append(parse_float(row[0], line_no, "time_s"))
        values.append(parse_float(row[1], line_no, "rr_hz"))
    if not values:
        raise InsufficientDataError(f"{path} holds no trajectory values")
    if "window_step_s" in meta:
        step = float(meta["window_step_s"])
    elif len(times) >= 2:
        step = (times[-1] - times[0]) / (len(times) - 1)
    else:
        raise InsufficientDataError(f"{path}: cannot infer the window step from one row")
    window_s = float(meta["window_s"]) if "window_s" in meta else None
    return RrTrajectory(np.asarray(values), step, float(meta.get("origin_time_s", times[0])), window_s)

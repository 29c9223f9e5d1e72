"""On-disk formats: WAV audio, wrench/annotation/feature CSVs, trial directories.

Floats are written with 17 significant digits so that reading and writing
again reproduces the same bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .dataset import LabeledDataset
from .features import FEATURE_NAMES, FeatureMatrix
from .signal_core import WRENCH_CHANNELS, MultimodalRecording, TimeSeries

FLOAT_FMT = "%.17g"
WRENCH_HEADER = ("t",) + WRENCH_CHANNELS
ANNOTATION_HEADER = ("trial_id", "event_type", "t")
FEATURE_HEADER = ("t",) + FEATURE_NAMES
LABELED_HEADER = FEATURE_HEADER + ("label", "trial_id")
TRIAL_FILES = ("audio.wav", "wrench.csv", "annotations.csv")
MANIFEST_HEADER = ("trial_id", "path", "n_contacts", "n_exogenous")
JITTER_TOLERANCE = 0.01


class FormatError(ValueError):
    pass


def fmt(x: float) -> str:
    return FLOAT_FMT % x


# -- audio -------------------------------------------------------------------

def write_wav(path, audio: TimeSeries, sample_format: str = "float32") -> None:
    if audio.n_channels != 1:
        raise FormatError("only mono audio is supported")
    rate = int(round(audio.sample_rate))
    x = audio.samples[0]
    if sample_format == "float32":
        data = x.astype(np.float32)
    elif sample_format == "int16":
        data = np.round(np.clip(x, -1.0, 32767 / 32768) * 32768).astype(np.int16)
    else:
        raise FormatError(f"unsupported sample format {sample_format!r}")
    wavfile.write(str(path), rate, data)


def read_wav(path, start_time: float = 0.0) -> TimeSeries:
    try:
        rate, data = wavfile.read(str(path))
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: cannot read WAV ({exc})") from exc
    if data.ndim != 1:
        raise FormatError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        x = data.astype(float) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(float) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(float)
    else:
        raise FormatError(f"{path}: unsupported WAV sample type {data.dtype}")
    return TimeSeries(x, rate, start_time)


# -- CSV helpers -------------------------------------------------------------

def _read_rows(path, header) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror or exc}") from exc
    if not rows or tuple(h.strip() for h in rows[0]) != tuple(header):
        raise FormatError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def _write_matrix(path, header, matrix: np.ndarray, extra_cols=()) -> None:
    """Numeric matrix plus optional trailing string columns."""
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    if len(matrix):
        body = io.StringIO()
        np.savetxt(body, matrix, fmt=FLOAT_FMT, delimiter=",")
        lines = body.getvalue().splitlines()
        if extra_cols:
            lines = [",".join([ln, *map(str, vals)]) for ln, vals in zip(lines, zip(*extra_cols))]
        buf.write("\n".join(lines) + "\n")
    Path(path).write_text(buf.getvalue())


def _read_matrix(path, header, n_numeric: int) -> tuple[np.ndarray, list[list[str]]]:
    rows = _read_rows(path, header)
    try:
        nums = np.array([[float(v) for v in r[:n_numeric]] for r in rows], dtype=float).reshape(len(rows), n_numeric)
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed numeric row ({exc})") from exc
    return nums, [r[n_numeric:] for r in rows]


# -- wrench ------------------------------------------------------------------

def write_wrench_csv(path, wrench: TimeSeries) -> None:
    if wrench.n_channels != 6:
        raise FormatError("wrench must have 6 channels")
    _write_matrix(path, WRENCH_HEADER, np.column_stack([wrench.times(), wrench.samples.T]))


def read_wrench_csv(path) -> TimeSeries:
    data, _ = _read_matrix(path, WRENCH_HEADER, 7)
    if len(data) < 2:
        raise FormatError(f"{path}: need at least two wrench samples")
    t = data[:, 0]
    dt = np.diff(t)
    step = np.median(dt)
    if step <= 0 or np.max(np.abs(dt - step)) > JITTER_TOLERANCE * step:
        raise FormatError(f"{path}: wrench sampling is not uniform within {JITTER_TOLERANCE:.0%}")
    rate = float("%.9g" % ((len(t) - 1) / (t[-1] - t[0])))
    return TimeSeries(data[:, 1:].T, rate, t[0])


# -- annotations -------------------------------------------------------------

def write_annotations(path, rec: MultimodalRecording) -> None:
    lines = [",".join(ANNOTATION_HEADER)]
    events = [(t, "contact") for t in rec.contact_times] + [(t, "exogenous") for t in rec.exogenous_times]
    for t, kind in sorted(events):
        lines.append(f"{rec.trial_id},{kind},{fmt(t)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_annotations(path) -> dict[str, dict[str, list[float]]]:
    """``{trial_id: {"contact": [...], "exogenous": [...]}}`` with sorted times."""
    out: dict[str, dict[str, list[float]]] = {}
    for row in _read_rows(path, ANNOTATION_HEADER):
        if len(row) != 3:
            raise FormatError(f"{path}: malformed annotation row {row}")
        trial, kind, t = row
        if kind not in ("contact", "exogenous"):
            raise FormatError(f"{path}: unknown event_type {kind!r}")
        out.setdefault(trial, {"contact": [], "exogenous": []})[kind].append(float(t))
    for events in out.values():
        for v in events.values():
            v.sort()
    return out


# -- trial directories -------------------------------------------------------

def write_trial(directory, rec: MultimodalRecording, sample_format: str = "float32") -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_wav(d / "audio.wav", rec.audio, sample_format)
    write_wrench_csv(d / "wrench.csv", rec.wrench)
    write_annotations(d / "annotations.csv", rec)
    return d


def read_trial(directory, trial_id: str | None = None) -> MultimodalRecording:
    d = Path(directory)
    missing = [name for name in TRIAL_FILES if not (d / name).is_file()]
    if missing:
        raise FormatError(f"{d}: missing {', '.join(missing)}")
    ann = read_annotations(d / "annotations.csv")
    if trial_id is None:
        trial_id = next(iter(ann), d.name)
    events = ann.get(trial_id, {"contact": [], "exogenous": []})
    wrench = read_wrench_csv(d / "wrench.csv")
    audio = read_wav(d / "audio.wav", wrench.start_time)
    return MultimodalRecording(audio, wrench, events["contact"], events["exogenous"], trial_id)


def write_manifest(path, entries: list[tuple[str, str, int, int]]) -> None:
    lines = [",".join(MANIFEST_HEADER)] + [",".join(map(str, e)) for e in entries]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> list[dict]:
    rows = _read_rows(path, MANIFEST_HEADER)
    return [dict(zip(MANIFEST_HEADER, r)) for r in rows]


# -- features and labeled datasets -------------------------------------------

def write_features(path, fm: FeatureMatrix) -> None:
    _write_matrix(path, FEATURE_HEADER, np.column_stack([fm.timestamps, fm.values]))


def read_features(path) -> FeatureMatrix:
    data, _ = _read_matrix(path, FEATURE_HEADER, len(FEATURE_HEADER))
    return FeatureMatrix(data[:, 0], data[:, 1:])


def write_labeled(path, ds: LabeledDataset) -> None:
    t = ds.timestamps if ds.timestamps is not None else np.full(len(ds), np.nan)
    _write_matrix(path, LABELED_HEADER, np.column_stack([t, ds.X]), [ds.y.tolist(), ds.trial_ids.tolist()])


def read_labeled(path) -> LabeledDataset:
    data, rest = _read_matrix(path, LABELED_HEADER, len(FEATURE_HEADER))
    try:
        y = [int(r[0]) for r in rest]
        ids = [r[1] for r in rest]
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed label columns ({exc})") from exc
    return LabeledDataset(data[:, 1:], y, ids, data[:, 0])


# -- reports -----------------------------------------------------------------

def write_csv(path, header, rows) -> None:
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return fmt(float(v))
        return str(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")

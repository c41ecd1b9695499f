"""CSV ingestion: parse, gap-fill, window, and normalize channel series.

Input format: a UTF-8 CSV with a header row, a ``timestamp`` column
(ISO-8601, UTC) and one value column per channel. Rows must land on a
regular grid of ``sample_period`` seconds; absent rows and empty cells
become gaps. Short gaps are interpolated, long gaps poison the windows
that cover them.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

DEFAULT_SAMPLE_PERIOD = 60.0
DEFAULT_MAX_GAP = 15 * 60.0
DEFAULT_WINDOW_LENGTH = 24 * 3600.0


class MalformedRow(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class NonMonotonicTimestamps(ValueError):
    """Duplicate timestamps in the input."""


class UnknownUnit(ValueError):
    pass


class WindowLongerThanSeries(ValueError):
    pass


class Unit(enum.Enum):
    KW = "kW"
    PERCENT_RH = "percent_rh"
    M_PER_S = "m_per_s"
    CELSIUS = "celsius"


@dataclass
class TimeSeries:
    """One channel of regularly sampled scalar data. Gaps are NaN."""

    channel_id: str
    unit: Unit
    sample_period: float
    start_time: datetime
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size == 0:
            raise ValueError("values must be non-empty")
        if self.sample_period <= 0:
            raise ValueError("sample_period must be > 0")

    def time_at(self, index: int) -> datetime:
        return datetime.fromtimestamp(
            self.start_time.timestamp() + index * self.sample_period, tz=timezone.utc
        )


@dataclass
class Window:
    """A fixed-length slice of a parent channel."""

    parent_channel: str
    start_index: int
    samples: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)


@dataclass(frozen=True)
class ColumnSpec:
    """Column-to-unit mapping used by parse_csv.

    Channels absent from ``units`` fall back to ``default_unit``.
    """

    timestamp_column: str = "timestamp"
    units: dict = field(default_factory=dict)
    default_unit: str = "kW"
    sample_period: float = DEFAULT_SAMPLE_PERIOD


_UNIT_BY_NAME = {u.value: u for u in Unit}


def _resolve_unit(name: str) -> Unit:
    try:
        return _UNIT_BY_NAME[name]
    except KeyError:
        raise UnknownUnit(f"unknown unit {name!r}; expected one of {sorted(_UNIT_BY_NAME)}")


def _parse_timestamp(raw: str, line_no: int) -> datetime:
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        raise MalformedRow(line_no, f"bad timestamp {raw!r}")
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_csv(stream, schema: ColumnSpec = ColumnSpec()) -> list[TimeSeries]:
    """Parse a CSV byte/text stream into one TimeSeries per value column.

    Rows are sorted by timestamp; duplicates raise NonMonotonicTimestamps.
    Timestamps must land on the ``schema.sample_period`` grid anchored at
    the earliest row; grid points with no row become NaN gaps, as do empty
    cells.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if hasattr(stream, "read") and isinstance(stream.read(0), bytes):
        stream = io.TextIOWrapper(stream, encoding="utf-8")
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, "empty input, no header row")
    header = [h.strip() for h in header]
    if schema.timestamp_column not in header:
        raise MalformedRow(1, f"no {schema.timestamp_column!r} column in header")
    ts_col = header.index(schema.timestamp_column)
    channels = [(i, name) for i, name in enumerate(header) if i != ts_col]
    if not channels:
        raise MalformedRow(1, "no value columns")
    units = {
        name: _resolve_unit(schema.units.get(name, schema.default_unit))
        for _, name in channels
    }

    rows: list[tuple[datetime, list[float]]] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise MalformedRow(line_no, f"expected {len(header)} fields, got {len(row)}")
        ts = _parse_timestamp(row[ts_col].strip(), line_no)
        vals = []
        for i, name in channels:
            cell = row[i].strip()
            if cell == "":
                vals.append(math.nan)
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise MalformedRow(line_no, f"bad value {cell!r} in column {name!r}")
        rows.append((ts, vals))

    if not rows:
        raise MalformedRow(2, "no data rows")
    rows.sort(key=lambda r: r[0])
    for (a, _), (b, _) in zip(rows, rows[1:]):
        if a == b:
            raise NonMonotonicTimestamps(f"duplicate timestamp {a.isoformat()}")

    start = rows[0][0]
    period = schema.sample_period
    n = int(round((rows[-1][0] - start).total_seconds() / period)) + 1
    grid = np.full((n, len(channels)), np.nan)
    for ts, vals in rows:
        offset = (ts - start).total_seconds() / period
        idx = int(round(offset))
        if abs(offset - idx) > 1e-6 or idx < 0 or idx >= n:
            raise MalformedRow(
                2, f"timestamp {ts.isoformat()} off the {period:g}s grid"
            )
        grid[idx] = vals

    return [
        TimeSeries(
            channel_id=name,
            unit=units[name],
            sample_period=period,
            start_time=start,
            values=grid[:, k],
        )
        for k, (_, name) in enumerate(channels)
    ]


def fill_gaps(ts: TimeSeries, max_gap: float = DEFAULT_MAX_GAP) -> TimeSeries:
    """Linearly interpolate NaN runs no longer than ``max_gap`` seconds.

    Longer runs, and runs touching either end of the series, are left as
    NaN; make_windows drops any window that covers them. Observed samples
    are never altered.
    """
    values = ts.values.copy()
    max_run = int(math.floor(max_gap / ts.sample_period))
    n = len(values)
    i = 0
    while i < n:
        if not math.isnan(values[i]):
            i += 1
            continue
        j = i
        while j < n and math.isnan(values[j]):
            j += 1
        run = j - i
        if run <= max_run and i > 0 and j < n:
            left, right = values[i - 1], values[j]
            for k in range(run):
                values[i + k] = left + (right - left) * (k + 1) / (run + 1)
        i = j
    return replace(ts, values=values)


def make_windows(
    ts: TimeSeries,
    length: float = DEFAULT_WINDOW_LENGTH,
    stride: float | None = None,
) -> list[Window]:
    """Slice the series into fixed-length windows.

    ``length`` and ``stride`` are in seconds; stride defaults to length
    (non-overlapping). The trailing partial window is dropped, and so is
    any window still containing NaN after gap filling.
    """
    if stride is None:
        stride = length
    if length < ts.sample_period or stride < ts.sample_period:
        raise ValueError("length and stride must be >= sample_period")
    n_len = int(round(length / ts.sample_period))
    n_stride = int(round(stride / ts.sample_period))
    n = len(ts.values)
    if n_len > n:
        raise WindowLongerThanSeries(
            f"window of {n_len} samples exceeds series of {n}"
        )
    windows = []
    for start in range(0, n - n_len + 1, n_stride):
        chunk = ts.values[start : start + n_len]
        if np.isnan(chunk).any():
            continue
        windows.append(Window(ts.channel_id, start, chunk.copy()))
    return windows


def normalize_minmax(w: Window) -> Window:
    """Affine map of the window onto [0, 1].

    Constant windows map to 0.5 everywhere (neutral mid-gray; avoids a
    divide by zero).
    """
    if w.normalized:
        raise ValueError("window already normalized")
    lo = float(w.samples.min())
    hi = float(w.samples.max())
    if hi > lo:
        samples = (w.samples - lo) / (hi - lo)
    else:
        samples = np.full_like(w.samples, 0.5)
    return Window(w.parent_channel, w.start_index, samples, normalized=True)

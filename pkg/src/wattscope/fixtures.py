"""Synthetic appliance signals with known ground truth.

Desk-scale stand-ins for real building telemetry: seven appliance
archetypes (duty cycles, bursts, office-hours loads) plus injected
anomalies whose exact sample ranges are returned alongside the series.
Everything is a pure function of the spec, so the same spec always
yields the same bytes.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import AnalysisType, WindowMeta, record_id, window_start_token
from .ingest import TimeSeries, Unit

ARCHETYPES = (
    "desktop",
    "microwave",
    "fridge",
    "water_dispenser",
    "coffee_machine",
    "kettle",
    "printer",
)

ANOMALY_KINDS = ("spike", "dropout", "level_shift")

# 2023-07-01T00:00:00Z
DEFAULT_START = 1688169600.0


@dataclass(frozen=True)
class AnomalySpec:
    kind: str
    start: int
    duration: int
    magnitude: float = 0.0

    def __post_init__(self):
        if self.kind not in ANOMALY_KINDS:
            raise ValueError(f"unknown anomaly kind {self.kind!r}")
        if self.start < 0 or self.duration < 1:
            raise ValueError("anomaly range must be non-empty and nonnegative")

    @property
    def end(self) -> int:
        return self.start + self.duration


@dataclass(frozen=True)
class SyntheticSpec:
    archetype: str = "fridge"
    days: int = 2
    sample_period: float = 60.0
    noise_level: float = 0.005
    anomalies: tuple = ()
    seed: int = 0
    start_time: float = DEFAULT_START
    channel: str = ""

    def __post_init__(self):
        if self.archetype not in ARCHETYPES:
            raise ValueError(f"unknown archetype {self.archetype!r}")
        if self.days < 1 or self.sample_period <= 0:
            raise ValueError("days must be >= 1 and sample_period > 0")
        if not self.channel:
            object.__setattr__(self, "channel", f"{self.archetype}_kw")

    @property
    def n_samples(self) -> int:
        return int(round(self.days * 86400.0 / self.sample_period))


def _office_hours(tod_hours: np.ndarray) -> np.ndarray:
    return ((tod_hours >= 9.0) & (tod_hours < 17.0)).astype(float)


def _bursts(n, rng, count, lo_min, hi_min, level, period, tod=None, window=None):
    """Scatter `count` rectangular bursts of level kW over the series."""
    kw = np.zeros(n)
    minutes = max(1, int(round(60.0 / period)))
    n_days = max(1, int(n * period / 86400.0))
    for _ in range(count):
        if tod is not None and window is not None:
            day = int(rng.integers(0, n_days))
            offset = (tod + rng.uniform(-window, window)) * 3600.0
            start = int((day * 86400.0 + offset) / period)
        else:
            start = int(rng.integers(0, n))
        length = int(rng.integers(lo_min, hi_min + 1)) * minutes
        if 0 <= start < n:
            kw[start : start + length] += level
    return kw


def _base_pattern(spec: SyntheticSpec, rng) -> np.ndarray:
    n = spec.n_samples
    t = np.arange(n) * spec.sample_period
    tod = (t % 86400.0) / 3600.0
    a = spec.archetype
    if a == "fridge":
        cycle = 45.0 * 60.0
        phase = rng.uniform(0, cycle)
        on = ((t + phase) % cycle) < 15.0 * 60.0
        return 0.02 + 0.10 * on
    if a == "desktop":
        ripple = 0.01 * np.sin(2.0 * np.pi * t / 86400.0)
        return 0.04 + 0.09 * _office_hours(tod) + np.maximum(ripple, 0.0)
    if a == "microwave":
        kw = np.full(n, 0.003)
        for meal in (8.0, 12.5, 18.0):
            kw += _bursts(n, rng, spec.days, 1, 3, 1.1, spec.sample_period, meal, 0.5)
        return kw
    if a == "water_dispenser":
        reheat = ((t % (2.0 * 3600.0)) < 8.0 * 60.0).astype(float)
        return 0.02 + 0.43 * reheat
    if a == "coffee_machine":
        return 0.01 + _bursts(n, rng, 3 * spec.days, 2, 5, 0.9, spec.sample_period, 8.5, 1.5)
    if a == "kettle":
        return 0.005 + _bursts(n, rng, 5 * spec.days, 2, 4, 2.2, spec.sample_period)
    # printer: idle floor with office-hours jobs
    kw = np.full(n, 0.015)
    jobs = _bursts(n, rng, 6 * spec.days, 1, 5, 0.5, spec.sample_period, 13.0, 3.5)
    return kw + jobs * _office_hours(tod)


def generate(spec: SyntheticSpec):
    """Build the series and echo its anomalies as exact sample ranges."""
    rng = np.random.default_rng(spec.seed)
    kw = _base_pattern(spec, rng)
    if spec.noise_level > 0:
        kw = np.maximum(kw + rng.normal(0.0, spec.noise_level, len(kw)), 0.0)
    for an in spec.anomalies:
        stop = min(an.end, len(kw))
        if an.kind == "spike":
            kw[an.start : stop] += an.magnitude
        elif an.kind == "dropout":
            kw[an.start : stop] = 0.0
        else:
            kw[an.start : stop] += an.magnitude
    ts = TimeSeries(
        channel_id=spec.channel,
        unit=Unit.KW,
        sample_period=spec.sample_period,
        start_time=datetime.datetime.fromtimestamp(
            spec.start_time, tz=datetime.timezone.utc
        ),
        values=kw,
    )
    return ts, list(spec.anomalies)


def write_csv(series, path) -> None:
    """Emit one or more aligned series in the ingest CSV format."""
    if isinstance(series, TimeSeries):
        series = [series]
    first = series[0]
    for ts in series[1:]:
        if len(ts.values) != len(first.values) or ts.start_time != first.start_time:
            raise ValueError("channels must share the timestamp grid")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("timestamp," + ",".join(ts.channel_id for ts in series) + "\n")
        for i in range(len(first.values)):
            stamp = first.time_at(i).strftime("%Y-%m-%dT%H:%M:%SZ")
            cells = ",".join(f"{ts.values[i]:.6f}" for ts in series)
            f.write(f"{stamp},{cells}\n")


def write_ground_truth(spec: SyntheticSpec, anomalies, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for an in anomalies:
            f.write(
                json.dumps(
                    {
                        "channel": spec.channel,
                        "kind": an.kind,
                        "start_sample": an.start,
                        "end_sample": an.end,
                        "start_time": spec.start_time + an.start * spec.sample_period,
                        "magnitude": an.magnitude,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def _minutes(samples: int, period: float) -> int:
    return max(1, int(round(samples * period / 60.0)))


def _window_anomalies(ts: TimeSeries, start_index: int, length: int, anomalies):
    hits = []
    for an in anomalies:
        if an.start < start_index + length and an.end > start_index:
            hits.append(an)
    return hits


def synthesize_answers(ts: TimeSeries, windows, anomalies, kinds=("cwt", "rp"),
                       analysis_types=None) -> dict:
    """Templated reference texts keyed by record id, one per
    (window, encoding kind, analysis type)."""
    if analysis_types is None:
        analysis_types = list(AnalysisType)
    answers = {}
    for w in windows:
        token = window_start_token(ts.time_at(w.start_index).timestamp())
        peak_idx = int(np.argmax(w.samples))
        peak_epoch = ts.time_at(w.start_index + peak_idx).timestamp()
        peak_hour = int((peak_epoch % 86400.0) // 3600.0)
        texts = {}
        texts[AnalysisType.MONITORING] = (
            f"Consumption follows the usual {ts.channel_id} pattern with mean "
            f"{float(np.mean(w.samples)):.3f} kW and peak {float(np.max(w.samples)):.3f} kW."
        )
        hits = _window_anomalies(ts, w.start_index, len(w.samples), anomalies)
        if hits:
            parts = []
            for an in hits:
                stamp = ts.time_at(an.start).strftime("%Y-%m-%d %H:%M")
                parts.append(
                    f"{an.kind} starting {stamp} lasting "
                    f"{_minutes(an.duration, ts.sample_period)} minutes"
                )
            texts[AnalysisType.ANOMALY_DETECTION] = (
                "Detected " + "; ".join(parts) + "."
            )
        else:
            texts[AnalysisType.ANOMALY_DETECTION] = "No anomalies detected in this window."
        texts[AnalysisType.RECOMMENDATION] = (
            f"Shift flexible loads away from {peak_hour:02d}:00 when "
            f"{ts.channel_id} consumption peaks."
        )
        for kind in kinds:
            meta = WindowMeta(ts.channel_id, token, kind)
            for task in analysis_types:
                answers[record_id(meta, task)] = texts[task]
    return answers


def write_answers(answers: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rid in sorted(answers):
            f.write(json.dumps({"id": rid, "answer": answers[rid]},
                               ensure_ascii=False, separators=(",", ":")) + "\n")

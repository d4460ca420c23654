"""Sensor time series: CSV ingestion, a synthetic generator, and window framing.

A window of ``t`` consecutive steps becomes one regression sample whose
variables are the ``t * nl`` (slot, location) pairs.  Columns are ordered
slot-major: column ``(slot - 1) * nl + loc`` holds location ``loc`` at
``slot`` (slots are 1-based, location indices 0-based).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class SensorTrace:
    location_ids: list[int]
    readings: np.ndarray  # [n_steps, n_locations]
    step_period: float = 1.0
    timestamps: np.ndarray | None = None
    dropped: int = 0

    def __post_init__(self):
        readings = np.asarray(self.readings, dtype=float)
        if readings.ndim != 2 or readings.shape[1] != len(self.location_ids):
            raise TraceError("readings must be [n_steps, n_locations]")
        if len(set(self.location_ids)) != len(self.location_ids):
            raise TraceError("duplicate location ids")
        if not np.all(np.isfinite(readings)):
            raise TraceError("readings contain non-finite values")
        if self.step_period <= 0:
            raise TraceError("step_period must be positive")
        object.__setattr__(self, "readings", readings)

    @property
    def n_steps(self) -> int:
        return self.readings.shape[0]

    @property
    def n_locations(self) -> int:
        return self.readings.shape[1]


@dataclass(frozen=True)
class WindowedDataset:
    t: int
    nl: int
    data: np.ndarray  # [n, t * nl], slot-major columns
    location_ids: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != self.t * self.nl:
            raise TraceError("column count must equal t * nl")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def variables(self) -> list[tuple[int, int]]:
        return [(slot, loc) for slot in range(1, self.t + 1) for loc in range(self.nl)]

    def column(self, slot: int, loc: int) -> int:
        if not (1 <= slot <= self.t and 0 <= loc < self.nl):
            raise KeyError((slot, loc))
        return (slot - 1) * self.nl + loc

    def columns(self, pairs) -> list[int]:
        return [self.column(s, l) for s, l in pairs]

    def location_series(self) -> np.ndarray:
        """Unwindowed view: one row per step, one column per location."""
        return self.data.reshape(self.n * self.t, self.nl)


def load_trace(path) -> SensorTrace:
    """Read a trace CSV (``timestamp,<id0>,<id1>,...``; ``#`` starts a comment).

    Rows with any missing or unparsable reading are dropped; the count is
    stored on the returned trace as ``dropped``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TraceError(f"unreadable file: {path}") from exc

    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise TraceError("zero usable rows")
    rows = list(csv.reader(lines))
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise TraceError("header must be timestamp followed by location ids")
    try:
        ids = [int(h) for h in header[1:]]
    except ValueError as exc:
        raise TraceError(f"non-integer location id in header: {header[1:]}") from exc
    if len(set(ids)) != len(ids):
        raise TraceError("duplicate location ids")

    stamps, values, dropped = [], [], 0
    for row in rows[1:]:
        try:
            if len(row) != len(header):
                raise ValueError
            ts = float(row[0])
            vals = [float(v) for v in row[1:]]
        except ValueError:
            dropped += 1
            continue
        if not (math.isfinite(ts) and all(math.isfinite(v) for v in vals)):
            dropped += 1
            continue
        stamps.append(ts)
        values.append(vals)
    if not values:
        raise TraceError("zero usable rows")
    if dropped:
        log.info("dropped %d incomplete rows from %s", dropped, path)

    stamps = np.asarray(stamps)
    order = np.argsort(stamps, kind="stable")
    stamps = stamps[order]
    readings = np.asarray(values)[order]
    diffs = np.diff(stamps)
    period = float(np.median(diffs)) if diffs.size and np.median(diffs) > 0 else 1.0
    return SensorTrace(ids, readings, period, stamps, dropped)


def save_trace(trace: SensorTrace, path) -> None:
    stamps = trace.timestamps
    if stamps is None:
        stamps = np.arange(trace.n_steps) * trace.step_period
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", *trace.location_ids])
        for ts, row in zip(stamps, trace.readings):
            w.writerow([repr(float(ts)), *(repr(float(v)) for v in row)])


def generate_synthetic_trace(
    seed: int,
    nl: int = 17,
    n_steps: int = 40000,
    spatial_corr: float = 0.3,
    temporal_corr: float = 0.95,
    nugget: float = 0.3,
    scale_spread: float = 1.0,
    step_period: float = 30.0,
) -> SensorTrace:
    """Gaussian-field stand-in for a temperature deployment.

    Locations are scattered on the unit square.  Innovations share an
    exponential covariance ``exp(-d / spatial_corr)`` (identity when
    ``spatial_corr`` is 0) and each location follows a stationary AR(1)
    process with coefficient ``temporal_corr``.

    ``nugget`` adds independent per-location AR(1) variation on top of the
    shared field, and ``scale_spread`` gives locations log-normally spread
    amplitudes (indoor sensors near windows or vents swing far more than
    sheltered ones).  Set both to 0 for a homogeneous field.
    """
    if nl < 2:
        raise TraceError("nl must be >= 2")
    if n_steps < 1:
        raise TraceError("n_steps must be >= 1")
    if spatial_corr < 0:
        raise TraceError("spatial_corr must be >= 0")
    if not 0 <= temporal_corr < 1:
        raise TraceError("temporal_corr must lie in [0, 1)")
    if nugget < 0 or scale_spread < 0:
        raise TraceError("nugget and scale_spread must be >= 0")

    rng = np.random.default_rng(seed)
    pos = rng.random((nl, 2))
    if spatial_corr > 0:
        d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        cov = np.exp(-d / spatial_corr)
    else:
        cov = np.eye(nl)
    chol = np.linalg.cholesky(cov + 1e-10 * np.eye(nl))

    rho = temporal_corr
    innov = np.sqrt(1.0 - rho * rho)
    shocks = rng.standard_normal((n_steps, nl)) @ chol.T
    local = rng.standard_normal((n_steps, nl)) * math.sqrt(nugget)
    x = np.empty((n_steps, nl))
    x[0] = shocks[0] + local[0]
    for i in range(1, n_steps):
        x[i] = rho * x[i - 1] + innov * (shocks[i] + local[i])

    scales = np.exp(scale_spread * rng.standard_normal(nl))
    offsets = 20.0 + 2.0 * rng.standard_normal(nl)
    readings = offsets + scales * x
    stamps = np.arange(n_steps) * step_period
    return SensorTrace(list(range(nl)), readings, step_period, stamps)


def windowize(trace: SensorTrace, t: int, train_fraction: float = 0.5) -> tuple[WindowedDataset, WindowedDataset]:
    """Cut the trace into disjoint consecutive windows of ``t`` steps.

    The trailing remainder is dropped.  The first
    ``ceil(train_fraction * n_windows)`` windows form the training set and
    the rest the test set.
    """
    if t < 1:
        raise TraceError("window size must be >= 1")
    if not 0 < train_fraction < 1:
        raise TraceError("train_fraction must lie in (0, 1)")
    n_windows = trace.n_steps // t
    n_train = math.ceil(train_fraction * n_windows)
    if n_windows < 2 or n_train < 1 or n_train >= n_windows:
        raise TraceError("too few steps for at least one train and one test window")

    nl = trace.n_locations
    rows = trace.readings[: n_windows * t].reshape(n_windows, t * nl)
    ids = list(trace.location_ids)
    return (
        WindowedDataset(t, nl, rows[:n_train].copy(), ids),
        WindowedDataset(t, nl, rows[n_train:].copy(), ids),
    )

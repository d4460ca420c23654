"""Joint placement-and-scheduling selection, baselines, and an exhaustive oracle.

Schedules hold ``(slot, location)`` entries with 1-based slots and 0-based
location indices into a :class:`~stair.trace.WindowedDataset`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from stair.regression import Estimator, ScatterScorer, fit_least_squares, mspe_sum, predict
from stair.trace import WindowedDataset

# candidates whose errors differ by less than this fraction of the
# intercept-only error are treated as tied (lowest slot, then location wins)
TIE_RTOL = 1e-10
BRUTE_FORCE_CAP = 2_000_000


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    t: int
    entries: list = field(default_factory=list)
    repeats_forever: bool = True

    def __post_init__(self):
        slots = [s for s, _ in self.entries]
        if len(set(slots)) != len(slots):
            raise ScheduleError("two entries share a slot")
        if any(not 1 <= s <= self.t for s in slots):
            raise ScheduleError(f"slot outside 1..{self.t}")

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def locations(self) -> list:
        return [loc for _, loc in self.entries]

    def sorted(self) -> "Schedule":
        return Schedule(self.t, sorted(self.entries), self.repeats_forever)

    def save(self, path, location_ids=None) -> None:
        lines = [f"# window={self.t}"]
        for slot, loc in sorted(self.entries):
            lid = location_ids[loc] if location_ids is not None else loc
            lines.append(f"{slot},{lid}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path, location_ids=None) -> "Schedule":
        t = None
        entries = []
        index = {lid: i for i, lid in enumerate(location_ids)} if location_ids is not None else None
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "window":
                    t = int(val)
                continue
            slot, lid = line.split(",")
            lid = int(lid)
            if index is not None:
                if lid not in index:
                    raise ScheduleError(f"unknown location id {lid}")
                lid = index[lid]
            entries.append((int(slot), lid))
        if t is None:
            raise ScheduleError("missing '# window=t' header")
        return cls(t, entries)


@dataclass(frozen=True)
class SelectionResult:
    selected: Schedule
    used_locations: frozenset
    estimator: Estimator
    err_trajectory: list

    @property
    def err(self) -> float:
        return self.err_trajectory[-1]


def _check_args(train: WindowedDataset, t, k, ns, LA):
    if t is None:
        t = train.t
    if t != train.t:
        raise ScheduleError(f"window {t} does not match dataset window {train.t}")
    LA = sorted(set(range(train.nl) if LA is None else LA))
    if not LA or any(not 0 <= loc < train.nl for loc in LA):
        raise ScheduleError("available locations must be valid indices")
    if ns is None:
        ns = len(LA)
    if not 1 <= k <= t:
        raise ScheduleError("need 1 <= k <= t")
    if not 1 <= ns <= len(LA):
        raise ScheduleError("need 1 <= ns <= |LA|")
    if train.n < 2:
        raise ScheduleError("training set needs at least 2 samples")
    return t, ns, LA


def _argmin_with_ties(errs, tol: float) -> int:
    """First index (in evaluation order) within ``tol`` of the minimum."""
    errs = np.asarray(errs)
    return int(np.flatnonzero(errs <= errs.min() + tol)[0])


def fit_selection(train: WindowedDataset, pairs) -> Estimator:
    """Least-squares estimator predicting every unselected variable from ``pairs``."""
    xcols = train.columns(pairs)
    ycols = sorted(set(range(train.data.shape[1])) - set(xcols))
    variables = train.variables
    return fit_least_squares(
        train.data[:, xcols],
        train.data[:, ycols],
        [variables[c] for c in xcols],
        [variables[c] for c in ycols],
    )


def selection_error(train: WindowedDataset, pairs) -> float:
    """Summed training MSPE of the fit/predict pipeline for one selection."""
    xcols = train.columns(pairs)
    ycols = sorted(set(range(train.data.shape[1])) - set(xcols))
    est = fit_least_squares(train.data[:, xcols], train.data[:, ycols])
    return mspe_sum(predict(est, train.data[:, xcols]), train.data[:, ycols])


def stair_select(
    train: WindowedDataset,
    t: int | None = None,
    k: int = 1,
    ns: int | None = None,
    LA=None,
    engine: str = "scatter",
) -> SelectionResult:
    """Greedy joint choice of ``k`` (slot, location) activations.

    Each round scores every (available slot, available location) pair by
    the summed training MSPE of predicting all remaining variables from the
    picks so far plus that pair, and keeps the minimizer.  Once ``ns``
    distinct locations are in use, later rounds may only reuse them.

    ``engine="scatter"`` scores a round in one pass over the residual
    covariance; ``engine="direct"`` refits least squares per candidate.
    Both implement the same objective.
    """
    t, ns, LA = _check_args(train, t, k, ns, LA)
    nl = train.nl
    scorer = ScatterScorer(train.data)
    tol = TIE_RTOL * max(scorer.base, 1e-300)

    U: list[tuple[int, int]] = []
    LS: list[int] = []
    available_ts = list(range(1, t + 1))
    R = scorer.scatter
    trajectory = []

    for _ in range(k):
        cands = [(ts, loc) for ts in available_ts for loc in LA]
        if engine == "scatter":
            gains = scorer.gains(R)
            cur = float(np.trace(R))
            errs = [cur - gains[(ts - 1) * nl + loc] for ts, loc in cands]
        elif engine == "direct":
            errs = [selection_error(train, U + [c]) for c in cands]
        else:
            raise ValueError(f"unknown engine {engine!r}")
        ts, loc = cands[_argmin_with_ties(errs, tol)]

        U.append((ts, loc))
        R = scorer.condition(R, (ts - 1) * nl + loc)
        trajectory.append(float(np.trace(R)) if engine == "scatter" else float(min(errs)))
        available_ts.remove(ts)
        if loc not in LS:
            LS.append(loc)
        if len(LS) == ns:
            LA = sorted(LS)

    return SelectionResult(Schedule(t, U), frozenset(LS), fit_selection(train, U), trajectory)


def standard_greedy_select(train: WindowedDataset, k: int) -> list[int]:
    """Placement-only greedy over locations, ignoring time.

    Every step of every window is one sample of the per-location variables.
    A location can be chosen once; each round adds the location that
    minimizes the summed MSPE of the unselected locations.
    """
    nl = train.nl
    if not 1 <= k <= nl:
        raise ScheduleError(f"need 1 <= k <= {nl}")
    series = train.location_series()
    tol = TIE_RTOL * max(float(np.var(series, axis=0).sum()), 1e-300)
    chosen: list[int] = []
    for _ in range(k):
        cands = [loc for loc in range(nl) if loc not in chosen]
        errs = []
        for loc in cands:
            x = chosen + [loc]
            y = [j for j in range(nl) if j not in x]
            if not y:
                errs.append(0.0)
                continue
            est = fit_least_squares(series[:, x], series[:, y])
            errs.append(mspe_sum(predict(est, series[:, x]), series[:, y]))
        chosen.append(cands[_argmin_with_ties(errs, tol)])
    return chosen


def uniform_schedule(locations, t: int) -> Schedule:
    """Spread ``locations`` evenly over a window, first location at slot 1."""
    m = len(locations)
    if m > t:
        raise ScheduleError("more locations than slots")
    return Schedule(t, [(1 + (i * t) // m, loc) for i, loc in enumerate(locations)])


def round_robin_schedule(locations, horizon: int) -> Schedule:
    locations = list(locations)
    if not locations:
        raise ScheduleError("round robin needs at least one location")
    m = len(locations)
    return Schedule(horizon, [(s, locations[(s - 1) % m]) for s in range(1, horizon + 1)])


def evaluate_schedule_mse(selection, test: WindowedDataset, train: WindowedDataset | None = None) -> float:
    """Average squared error over every predicted test entry.

    ``selection`` is a :class:`SelectionResult` (its estimator is reused) or
    a :class:`Schedule`, in which case the estimator is fitted on ``train``.
    Scheduled (slot, location) variables are observed, not predicted.
    """
    if isinstance(selection, SelectionResult):
        sched, est = selection.selected, selection.estimator
    elif isinstance(selection, Schedule):
        if train is None:
            raise ScheduleError("a bare schedule needs training data to fit on")
        sched, est = selection, None
    else:
        raise TypeError("expected SelectionResult or Schedule")
    if sched.t != test.t:
        raise ScheduleError("schedule window does not match test window")
    try:
        xcols = test.columns(sched.entries)
    except KeyError as exc:
        raise ScheduleError(f"schedule references unknown variable {exc}") from exc
    if est is None:
        est = fit_selection(train, sched.entries)
    ycols = sorted(set(range(test.data.shape[1])) - set(xcols))
    resid = predict(est, test.data[:, xcols]) - test.data[:, ycols]
    return float(np.mean(resid**2))


def brute_force_select(
    train: WindowedDataset,
    t: int | None = None,
    k: int = 1,
    ns: int | None = None,
    LA=None,
    cap: int = BRUTE_FORCE_CAP,
) -> SelectionResult:
    """Exhaustive minimizer over slot-unique selections of size ``k``.

    Selections may use at most ``ns`` distinct locations.  Ties go to the
    lexicographically smallest slot-sorted selection.
    """
    t, ns, LA = _check_args(train, t, k, ns, LA)
    count = math.comb(t, k) * len(LA) ** k
    if count > cap:
        raise ScheduleError(f"{count} candidate selections exceed cap {cap}")

    best_sets, errs = [], []
    for slots in itertools.combinations(range(1, t + 1), k):
        for locs in itertools.product(LA, repeat=k):
            if len(set(locs)) > ns:
                continue
            pairs = tuple(zip(slots, locs))
            best_sets.append(pairs)
            errs.append(selection_error(train, pairs))
    errs = np.asarray(errs)
    base = float(np.var(train.data, axis=0).sum())
    tied = np.flatnonzero(errs <= errs.min() + TIE_RTOL * max(base, 1e-300))
    pairs = list(min(best_sets[i] for i in tied))

    trajectory = [selection_error(train, pairs[: i + 1]) for i in range(k - 1)] + [float(errs.min())]
    return SelectionResult(Schedule(t, pairs), frozenset(l for _, l in pairs), fit_selection(train, pairs), trajectory)


def empty_selection_error(train: WindowedDataset) -> float:
    """Summed MSPE of the intercept-only predictor (no sensors selected)."""
    return float(np.var(train.data, axis=0).sum())

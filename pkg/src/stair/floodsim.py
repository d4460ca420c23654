"""Tick-synchronous simulation of subset flooding, campaigns, and node lifetimes.

Reception model: a waiting participant hears a tick's concurrent
transmissions with probability ``1 - prod(1 - q[u, node])`` over the
transmitters ``u``.  This stands in for constructive interference: more
synchronized senders, better odds.  A node that first receives during tick
``tau`` stores relay counter ``tau + 1`` and transmits at the next
``max_tx`` ticks; the source transmits at ticks ``0 .. max_tx - 1``.  The
flood ends at the first tick with no transmitter.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from stair.activation import GLOSSY, ActiveSets, build_active_sets
from stair.scheduler import Schedule, round_robin_schedule
from stair.topology import (
    DEFAULT_THETA,
    ConnectivityGraph,
    LinkModel,
    build_connectivity_edges,
    build_min_hop_tree,
    generate_topology,
)

_LOG_FLOOR = -1e4  # exp() of this is exactly 0, so q == 1 means certain reception
SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class FloodConfig:
    max_tx: int = 5
    flood_period: float = 0.25  # seconds between flood starts
    ref_interval: int = 8  # every ref_interval-th flood is a sink reference flood
    slot_length: int = 1  # ticks per relay slot
    width: int | str = 1
    rx_cost: float = 1.0
    tx_cost: float = 1.0

    def __post_init__(self):
        if self.max_tx < 1:
            raise ValueError("max_tx must be >= 1")
        if self.ref_interval < 1:
            raise ValueError("ref_interval must be >= 1")
        if self.flood_period <= 0 or self.slot_length < 1:
            raise ValueError("flood_period and slot_length must be positive")


@dataclass
class NodeRuntime:
    """Per-node state inside one flood (used by :func:`trace_flood`)."""

    state: str = "Wait"  # Wait, Receive, Transmit or Off
    relay_counter: int = -1
    tx_done: int = 0
    alive: bool = True
    energy_spent: float = 0.0
    battery_mean: float = 40.0


@dataclass(frozen=True)
class FloodResult:
    delivered: bool
    tx: np.ndarray
    rx: np.ndarray
    listen: np.ndarray
    ticks: int
    counters: np.ndarray  # relay counter per node, -1 if never received
    sink_counter: int = -1


@dataclass
class SimReport:
    n: int
    seed: int
    label: str = ""
    tx: np.ndarray = None
    rx: np.ndarray = None
    listen: np.ndarray = None
    total_tx: int = 0  # transmissions in data floods
    ref_tx: int = 0  # transmissions in sink reference floods
    n_floods: int = 0
    n_data_floods: int = 0
    n_ref_floods: int = 0
    sink_delivered: int = 0
    epoch_alive: list = field(default_factory=list)
    epoch_delivered: list = field(default_factory=list)
    epoch_hours: float = 1.0
    initial_hazard: np.ndarray | None = None  # per day

    def __post_init__(self):
        for name in ("tx", "rx", "listen"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(self.n, dtype=np.int64))

    @property
    def all_tx(self) -> int:
        return self.total_tx + self.ref_tx

    @property
    def delivered_fraction(self) -> float:
        return self.sink_delivered / self.n_data_floods if self.n_data_floods else 0.0

    def energy(self, config: FloodConfig) -> np.ndarray:
        return config.tx_cost * self.tx + config.rx_cost * self.listen

    @property
    def cumulative_delivered(self) -> np.ndarray:
        return np.cumsum(self.epoch_delivered)

    def write_csvs(self, out_dir, prefix: str, config: FloodConfig) -> list[Path]:
        out_dir = Path(out_dir)
        paths = []
        energy = self.energy(config)
        p = out_dir / f"{prefix}_nodes.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "tx", "rx", "energy"])
            for v in range(self.n):
                w.writerow([v, int(self.tx[v]), int(self.rx[v]), repr(float(energy[v]))])
        paths.append(p)
        if self.epoch_alive:
            for name, series in (("alive", self.epoch_alive), ("delivered", self.epoch_delivered)):
                p = out_dir / f"{prefix}_{name}.csv"
                with open(p, "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["epoch", name])
                    for e, val in enumerate(series):
                        w.writerow([e, int(val)])
                paths.append(p)
        return paths


def _log_miss(q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.maximum(np.log1p(-q), _LOG_FLOOR)


def _flood_batch(logq, src, max_tx, rng, reps):
    """Run ``reps`` independent floods over the participants of ``logq``.

    Returns (tx, received, start, ticks): per replicate and node the
    transmission count, first-reception flag, first transmit tick (source 0,
    relays reception tick + 1, -1 otherwise), and the flood length in ticks.
    """
    m = logq.shape[0]
    start = np.full((reps, m), -1, dtype=np.int64)
    start[:, src] = 0
    has = start >= 0
    ticks = np.zeros(reps, dtype=np.int64)
    tau = 0
    while True:
        sending = has & (start <= tau) & (tau < start + max_tx)
        active = sending.any(axis=1)
        ticks[~active & (ticks == 0)] = tau
        if not active.any():
            break
        p = 1.0 - np.exp(sending.astype(float) @ logq)
        draws = rng.random((reps, m))
        got = ~has & (draws < p)
        start[got] = tau + 1
        has |= got
        tau += 1
    tx = np.where(has, max_tx, 0)
    return tx, has, start, ticks


def _listen_ticks(has, start, ticks, src):
    listen = np.where(has, start, ticks[:, None])
    listen[:, src] = 0
    return listen


def run_flood(
    graph: ConnectivityGraph,
    active_column,
    source: int,
    config: FloodConfig,
    rng: np.random.Generator,
    alive=None,
) -> FloodResult:
    """One flood from ``source`` among the alive nodes of ``active_column``."""
    n = graph.n
    part = np.asarray(active_column, dtype=bool).copy()
    if alive is not None:
        part &= np.asarray(alive, dtype=bool)
    zeros = np.zeros(n, dtype=np.int64)
    if not part[source]:
        return FloodResult(False, zeros, zeros.copy(), zeros.copy(), 0, np.full(n, -1))
    idx = np.flatnonzero(part)
    src = int(np.searchsorted(idx, source))
    logq = _log_miss(graph.q[np.ix_(idx, idx)])
    tx_b, has_b, start_b, ticks_b = _flood_batch(logq, src, config.max_tx, rng, 1)

    tx, rx, listen = zeros.copy(), zeros.copy(), zeros.copy()
    counters = np.full(n, -1)
    tx[idx] = tx_b[0]
    rx[idx] = has_b[0]
    rx[source] = 0
    listen[idx] = _listen_ticks(has_b, start_b, ticks_b, src)[0]
    counters[idx] = np.where(has_b[0], start_b[0], -1)
    counters[source] = 0
    delivered = bool(part[graph.sink] and counters[graph.sink] >= 0)
    return FloodResult(delivered, tx, rx, listen, int(ticks_b[0]), counters, int(counters[graph.sink]))


def trace_flood(graph: ConnectivityGraph, active_column, source: int, config: FloodConfig, rng) -> list[NodeRuntime]:
    """Replay :func:`run_flood` with identical draws and return final node states."""
    res = run_flood(graph, active_column, source, config, rng)
    nodes = []
    for v in range(graph.n):
        nr = NodeRuntime()
        if not active_column[v]:
            nr.state = "Off"
        else:
            nr.relay_counter = int(res.counters[v])
            nr.tx_done = int(res.tx[v])
            nr.state = "Off" if nr.tx_done >= config.max_tx else "Wait"
            nr.energy_spent = config.tx_cost * res.tx[v] + config.rx_cost * res.listen[v]
        nodes.append(nr)
    return nodes


def glossy_mode(sets: ActiveSets | int) -> ActiveSets:
    """Every node joins every flood."""
    n = sets if isinstance(sets, int) else sets.n
    return ActiveSets(n, np.ones((n, n), dtype=bool), GLOSSY)


def _flood_sources(schedule: Schedule) -> list[int]:
    entries = sorted(schedule.entries)
    if not entries:
        raise ValueError("schedule is empty")
    return [int(loc) for _, loc in entries]


def run_campaign(
    graph: ConnectivityGraph,
    sets: ActiveSets,
    schedule: Schedule,
    config: FloodConfig,
    n_floods: int,
    seed: int = 0,
    alive=None,
    label: str = "",
) -> SimReport:
    """Run ``n_floods`` flood slots.

    Every ``ref_interval``-th slot is a reference flood from the sink that
    all alive nodes join; the others loop through the schedule entries in
    slot order, each flooding among its source's active set.
    """
    sources = _flood_sources(schedule)
    n = graph.n
    alive = np.ones(n, dtype=bool) if alive is None else np.asarray(alive, dtype=bool)
    everyone = np.ones(n, dtype=bool)
    rng = np.random.default_rng(seed)
    rep = SimReport(n, seed, label or str(sets.width))
    data_i = 0
    for f in range(n_floods):
        if (f + 1) % config.ref_interval == 0:
            res = run_flood(graph, everyone, graph.sink, config, rng, alive)
            rep.ref_tx += int(res.tx.sum())
            rep.n_ref_floods += 1
        else:
            src = sources[data_i % len(sources)]
            data_i += 1
            res = run_flood(graph, sets.participants(src), src, config, rng, alive)
            rep.total_tx += int(res.tx.sum())
            rep.n_data_floods += 1
            rep.sink_delivered += int(res.delivered)
        rep.tx += res.tx
        rep.rx += res.rx
        rep.listen += res.listen
        rep.n_floods += 1
    return rep


def participation(sets: ActiveSets, sources, alive, ref_interval: int) -> np.ndarray:
    """Fraction of flood slots each alive node joins.

    Reference floods involve every alive node; a data slot whose source is
    dead carries no flood.
    """
    alive = np.asarray(alive, dtype=bool)
    sources = np.asarray(sources)
    live = alive[sources]
    data_share = sets.member[:, sources[live]].sum(axis=1) / len(sources)
    w = (1.0 + (ref_interval - 1) * data_share) / ref_interval
    return np.where(alive, w, 0.0)


def delivery_probability(graph, sets, source, alive, config, rng, reps) -> float:
    part = sets.participants(source) & alive
    if not part[source] or not part[graph.sink]:
        return 0.0
    if source == graph.sink:
        return 1.0
    idx = np.flatnonzero(part)
    src = int(np.searchsorted(idx, source))
    snk = int(np.searchsorted(idx, graph.sink))
    _, has, _, _ = _flood_batch(_log_miss(graph.q[np.ix_(idx, idx)]), src, config.max_tx, rng, reps)
    return float(has[:, snk].mean())


def run_lifetime_sim(
    graph: ConnectivityGraph,
    sets: ActiveSets,
    schedule: Schedule,
    config: FloodConfig,
    battery_mean_days: float = 40.0,
    horizon_days: float = 120.0,
    epoch_hours: float = 1.0,
    seed: int = 0,
    reps: int = 8,
    sink_powered: bool = True,
) -> SimReport:
    """Battery lifetimes under workload-scaled exponential failure.

    A node's workload is the fraction of flood slots it joins; in Glossy
    mode with every node alive this is 1, which maps to a mean battery life
    of ``battery_mean_days``.  Each epoch a node fails with hazard
    ``workload / battery_mean_days``; workloads are recomputed as nodes die.
    Sink deliveries per epoch are binomial draws with per-source success
    probabilities estimated from ``reps`` simulated floods over the alive
    participants, refreshed whenever a participant dies.
    """
    if horizon_days <= 0 or epoch_hours <= 0:
        raise ValueError("horizon and epoch length must be positive")
    rng = np.random.default_rng(seed)
    n = graph.n
    sources = np.asarray(_flood_sources(schedule))
    epoch_days = epoch_hours / 24.0
    n_epochs = int(round(horizon_days / epoch_days))
    floods_per_epoch = epoch_hours * 3600.0 / config.flood_period
    per_entry = int(round(floods_per_epoch * (config.ref_interval - 1) / config.ref_interval / len(sources)))

    alive = np.ones(n, dtype=bool)
    uniq = np.unique(sources)
    prob = {int(s): delivery_probability(graph, sets, int(s), alive, config, rng, reps) for s in uniq}
    rep = SimReport(n, seed, str(sets.width), epoch_hours=epoch_hours)

    for e in range(n_epochs):
        hazard = participation(sets, sources, alive, config.ref_interval) / battery_mean_days
        if e == 0:
            rep.initial_hazard = hazard.copy()
        rep.epoch_alive.append(int(alive.sum()))
        p = np.array([prob[int(s)] for s in sources])
        rep.epoch_delivered.append(int(rng.binomial(per_entry, p).sum()))

        dies = alive & (rng.random(n) < -np.expm1(-hazard * epoch_days))
        if sink_powered:
            dies[graph.sink] = False
        if dies.any():
            alive &= ~dies
            touched = sets.member[dies].any(axis=0)
            for s in uniq:
                if touched[s]:
                    prob[int(s)] = delivery_probability(graph, sets, int(s), alive, config, rng, reps)
    rep.sink_delivered = int(sum(rep.epoch_delivered))
    rep.n_data_floods = per_entry * len(sources) * n_epochs
    return rep


def _fit_through_origin(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    c = float(x @ y / (x @ x))
    ss_res = float(((y - c * x) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return c, 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def scaling_experiment(
    n_list,
    config: FloodConfig | None = None,
    width: int = 2,
    density: float = 135 / 140.0**2,
    side: float | None = None,
    model: LinkModel | None = None,
    theta: float = DEFAULT_THETA,
    seed: int = 0,
) -> dict:
    """Data-flood transmissions for one round of ``n`` source floods per size.

    Node density is held fixed (square side grows as ``sqrt(n)``) unless a
    fixed ``side`` is given.  Returns per-size rows plus least-squares fits
    of Glossy totals to ``c * n^2`` and STAIR totals to ``c * n * mean_depth``.
    """
    config = config or FloodConfig()
    rows = []
    for i, n in enumerate(n_list):
        if n < 4:
            raise ValueError("each n must be >= 4")
        sd = side if side is not None else math.sqrt(n / density)
        graph = generate_topology(seed + i, n, sd, model)
        tree = build_min_hop_tree(build_connectivity_edges(graph, theta), graph.sink, graph.q)
        sets = build_active_sets(graph, tree, width)
        sched = round_robin_schedule(range(n), n)
        cfg = FloodConfig(config.max_tx, config.flood_period, n + 1, config.slot_length, width)
        stair = run_campaign(graph, sets, sched, cfg, n, seed + 1000 + i)
        glossy = run_campaign(graph, glossy_mode(sets), sched, cfg, n, seed + 1000 + i)
        rows.append(
            {"n": n, "mean_depth": tree.mean_depth, "stair_tx": stair.total_tx, "glossy_tx": glossy.total_tx}
        )
    ns = np.array([r["n"] for r in rows], float)
    md = np.array([r["mean_depth"] for r in rows], float)
    c_g, r2_g = _fit_through_origin(ns**2, [r["glossy_tx"] for r in rows])
    c_s, r2_s = _fit_through_origin(ns * md, [r["stair_tx"] for r in rows])
    return {"rows": rows, "glossy_fit": (c_g, r2_g), "stair_fit": (c_s, r2_s)}

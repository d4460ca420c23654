"""Command-line driver: generate -> plan -> simulate -> lifetime, plus manifest replay.

Every command writes ``manifest_<command>.json`` next to its outputs, holding
the full configuration and a SHA-256 of each output file, so
``stair replay <manifest>`` can re-run it and check for identical bytes.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from stair.activation import ActiveSets, build_active_sets
from stair.floodsim import FloodConfig, glossy_mode, run_campaign, run_lifetime_sim
from stair.scheduler import (
    Schedule,
    evaluate_schedule_mse,
    round_robin_schedule,
    stair_select,
    standard_greedy_select,
    uniform_schedule,
)
from stair.topology import (
    ConnectivityGraph,
    build_connectivity_edges,
    build_min_hop_tree,
    generate_topology,
    profile_links,
)
from stair.trace import generate_synthetic_trace, load_trace, save_trace, windowize

log = logging.getLogger("stair")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_INVARIANT = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class MissingInput(Exception):
    pass


class InvariantViolation(Exception):
    pass


@dataclass
class ExperimentConfig:
    seed: int = 0
    out_dir: str = "out"
    # sensor trace
    trace_path: str = ""  # empty: use the generated trace.csv
    nl: int = 17
    n_steps: int = 40000
    spatial_corr: float = 0.3
    temporal_corr: float = 0.95
    nugget: float = 0.3
    scale_spread: float = 1.0
    # scheduling
    t: int = 20
    train_fraction: float = 0.5
    k_min: int = 2
    k_max: int = 18
    ns: int = 0  # 0: same as k
    # topology
    n_nodes: int = 135
    side: float = 140.0
    sink: int = 0
    theta: float = 0.7
    profile_rounds: int = 100
    # flooding
    widths: str = "1,4,5,10"
    max_tx: int = 5
    ref_interval: int = 8
    flood_period: float = 0.25
    n_floods: int = 4000
    sim_schedule: str = "schedule_nodes.txt"  # relative to out_dir; any plan schedule works
    # lifetime
    lifetime_width: int = 10
    battery_mean_days: float = 40.0
    horizon_days: float = 120.0
    epoch_hours: float = 1.0
    lifetime_seeds: int = 1
    reps: int = 8

    @property
    def width_list(self) -> list[int]:
        try:
            ws = [int(w) for w in self.widths.split(",") if w.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad widths {self.widths!r}") from exc
        if not ws or min(ws) < 1:
            raise ConfigError("widths must be positive integers")
        return ws

    def flood_config(self, width=1) -> FloodConfig:
        return FloodConfig(self.max_tx, self.flood_period, self.ref_interval, width=width)

    def validate(self):
        if self.t < 1 or not 1 <= self.k_min <= self.k_max <= self.t:
            raise ConfigError("need 1 <= k_min <= k_max <= t")
        if self.n_nodes < 2 or not 0 <= self.sink < self.n_nodes:
            raise ConfigError("invalid node count or sink")
        if self.nl > self.n_nodes:
            raise ConfigError("more sensor locations than nodes")
        self.width_list
        return self


def load_config(path=None, overrides=None) -> ExperimentConfig:
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise MissingInput(f"config file {path}") from exc
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        if parser.has_section("experiment"):
            values.update(parser["experiment"])
    values.update(overrides or {})
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, raw in values.items():
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        cast = {"int": int, "float": float, "str": str}[types[key]]
        try:
            kwargs[key] = cast(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {raw!r}") from exc
    return ExperimentConfig(**kwargs).validate()


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(cfg: ExperimentConfig, command: str, outputs: list[Path]) -> Path:
    out = Path(cfg.out_dir)
    manifest = {
        "command": command,
        "config": dataclasses.asdict(cfg),
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path = out / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _need(path: Path) -> Path:
    if not path.exists():
        raise MissingInput(str(path))
    return path


def _trace_path(cfg: ExperimentConfig) -> Path:
    return Path(cfg.trace_path) if cfg.trace_path else Path(cfg.out_dir) / "trace.csv"


def _bitmap_name(width) -> str:
    return f"active_w{width}.bin"


def _tree(cfg: ExperimentConfig, profiled: ConnectivityGraph):
    return build_min_hop_tree(build_connectivity_edges(profiled, cfg.theta), profiled.sink, profiled.q)


def cmd_generate(cfg: ExperimentConfig) -> list[Path]:
    """Synthetic trace, true and profiled topologies, tree, and active-set bitmaps."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []

    trace = generate_synthetic_trace(
        cfg.seed, cfg.nl, cfg.n_steps, cfg.spatial_corr, cfg.temporal_corr, cfg.nugget, cfg.scale_spread
    )
    save_trace(trace, out / "trace.csv")
    outputs.append(out / "trace.csv")

    graph = generate_topology(cfg.seed, cfg.n_nodes, cfg.side, sink=cfg.sink)
    graph.save(out / "topology.csv")
    profiled = profile_links(graph, cfg.profile_rounds, cfg.seed + 1)
    profiled.save(out / "profiled.csv")
    tree = _tree(cfg, profiled)
    tree.save(out / "tree.csv")
    outputs += [out / "topology.csv", out / "profiled.csv", out / "tree.csv"]

    for w in sorted(set(cfg.width_list) | {cfg.lifetime_width}):
        sets = build_active_sets(profiled, tree, w)
        sets.save(out / _bitmap_name(w))
        outputs.append(out / _bitmap_name(w))
    return outputs


def cmd_plan(cfg: ExperimentConfig) -> list[Path]:
    """Sweep k and compare STAIR, greedy + uniform timing, and greedy + round robin."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace = load_trace(_need(_trace_path(cfg)))
    train, test = windowize(trace, cfg.t, cfg.train_fraction)
    ids = trace.location_ids
    outputs = []
    rows = []
    for k in range(cfg.k_min, cfg.k_max + 1):
        ns = min(cfg.ns or k, train.nl)
        sel = stair_select(train, cfg.t, k, ns)
        if len({s for s, _ in sel.selected.entries}) != k or len(sel.used_locations) > ns:
            raise InvariantViolation(f"STAIR schedule for k={k} breaks slot or budget rules")
        schedules = [("stair", sel.selected)]
        row = [k, evaluate_schedule_mse(sel, test), None, None]
        # the placement-only baselines need k distinct locations
        if k <= train.nl:
            greedy = standard_greedy_select(train, k)
            uni = uniform_schedule(greedy, cfg.t)
            rr = Schedule(cfg.t, round_robin_schedule(greedy, k).entries)
            row[2] = evaluate_schedule_mse(uni, test, train)
            row[3] = evaluate_schedule_mse(rr, test, train)
            schedules += [("greedy_uniform", uni), ("round_robin", rr)]
        rows.append(row)
        for name, sched in schedules:
            p = out / f"schedule_{name}_k{k}.txt"
            sched.save(p, ids)
            outputs.append(p)

    p = out / "plan_mse.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "stair", "greedy_uniform", "round_robin"])
        for row in rows:
            w.writerow([row[0], *("" if v is None else repr(float(v)) for v in row[1:])])
    outputs.append(p)

    p = out / "schedule_nodes.txt"
    round_robin_schedule(range(cfg.n_nodes), cfg.n_nodes).save(p)
    outputs.append(p)
    return outputs


def _load_network(cfg: ExperimentConfig):
    out = Path(cfg.out_dir)
    graph = ConnectivityGraph.load(_need(out / "topology.csv"))
    schedule = Schedule.load(_need(out / cfg.sim_schedule))
    if any(not 0 <= loc < graph.n for loc in schedule.locations):
        raise InvariantViolation("schedule names nodes outside the topology")
    return graph, schedule


def cmd_simulate(cfg: ExperimentConfig) -> list[Path]:
    """Packet counts per width and for Glossy (every node in every flood)."""
    out = Path(cfg.out_dir)
    graph, schedule = _load_network(cfg)
    results = []
    for w in cfg.width_list:
        sets = ActiveSets.load(_need(out / _bitmap_name(w)))
        results.append((f"S{w}", run_campaign(graph, sets, schedule, cfg.flood_config(w), cfg.n_floods, cfg.seed)))
    glossy = run_campaign(graph, glossy_mode(graph.n), schedule, cfg.flood_config(), cfg.n_floods, cfg.seed)
    results.append(("Glossy", glossy))
    if any(r.total_tx > glossy.total_tx for _, r in results):
        raise InvariantViolation("a STAIR width transmitted more than Glossy")

    p = out / "packets.csv"
    with open(p, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["method", "total_tx", "ref_tx", "data_floods", "delivered_fraction"])
        for name, r in results:
            wr.writerow([name, r.total_tx, r.ref_tx, r.n_data_floods, repr(r.delivered_fraction)])
    return [p]


def cmd_lifetime(cfg: ExperimentConfig) -> list[Path]:
    """Alive-node and sink-delivery time series for STAIR and Glossy."""
    out = Path(cfg.out_dir)
    graph, schedule = _load_network(cfg)
    stair_sets = ActiveSets.load(_need(out / _bitmap_name(cfg.lifetime_width)))
    methods = (("stair", stair_sets), ("glossy", glossy_mode(graph.n)))
    outputs = []
    summary = []
    for name, sets in methods:
        alive_runs, deliv_runs = [], []
        for s in range(cfg.lifetime_seeds):
            rep = run_lifetime_sim(
                graph,
                sets,
                schedule,
                cfg.flood_config(sets.width),
                cfg.battery_mean_days,
                cfg.horizon_days,
                cfg.epoch_hours,
                seed=cfg.seed + s,
                reps=cfg.reps,
            )
            if np.any(np.diff(rep.epoch_alive) > 0):
                raise InvariantViolation("alive count increased")
            alive_runs.append(rep.epoch_alive)
            deliv_runs.append(rep.epoch_delivered)
        alive = np.mean(alive_runs, axis=0)
        deliv = np.mean(deliv_runs, axis=0)
        for metric, series in (("alive", alive), ("delivered", deliv)):
            p = out / f"lifetime_{name}_{metric}.csv"
            with open(p, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["epoch", metric])
                for e, v in enumerate(series):
                    wr.writerow([e, repr(float(v))])
            outputs.append(p)
        summary.append((name, float(deliv.sum())))

    p = out / "lifetime_summary.csv"
    with open(p, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["method", "cumulative_delivered"])
        for name, total in summary:
            wr.writerow([name, repr(total)])
    outputs.append(p)
    return outputs


COMMANDS = {"generate": cmd_generate, "plan": cmd_plan, "simulate": cmd_simulate, "lifetime": cmd_lifetime}


def run_command(name: str, cfg: ExperimentConfig) -> Path:
    outputs = COMMANDS[name](cfg)
    return _write_manifest(cfg, name, outputs)


def replay(manifest_path) -> list[str]:
    """Re-run a manifest's command; return the names of outputs whose bytes changed."""
    manifest = json.loads(Path(_need(Path(manifest_path))).read_text())
    cfg = ExperimentConfig(**manifest["config"]).validate()
    outputs = COMMANDS[manifest["command"]](cfg)
    fresh = {p.name: _sha256(p) for p in outputs}
    return sorted(k for k, v in manifest["outputs"].items() if fresh.get(k) != v)


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="stair", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI file with an [experiment] section")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    rp = sub.add_parser("replay")
    rp.add_argument("manifest")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    try:
        if args.command == "replay":
            changed = replay(args.manifest)
            if changed:
                print(f"replay mismatch: {', '.join(changed)}", file=sys.stderr)
                return EXIT_INVARIANT
            print("replay identical")
            return EXIT_OK
        overrides = _parse_set(args.set)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out_dir is not None:
            overrides["out_dir"] = args.out_dir
        cfg = load_config(args.config, overrides)
        manifest = run_command(args.command, cfg)
        print(manifest)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingInput, FileNotFoundError) as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

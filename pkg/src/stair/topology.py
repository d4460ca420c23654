"""Link-quality graphs, simulated profiling, and the sink-rooted minimum-hop tree."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_THETA = 0.7


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class LinkModel:
    """Log-distance path loss with log-normal shadowing, mapped to a reception ratio.

    ``q = q_max / (1 + exp(-(P_rx - sensitivity) / transition_db))`` where
    ``P_rx = tx_power - pl0 - 10 * exponent * log10(max(d, d0) / d0) - X``
    and ``X ~ N(0, sigma_db)`` is drawn independently per direction.
    """

    tx_power_dbm: float = 0.0
    pl0_db: float = 40.0
    d0: float = 1.0
    exponent: float = 3.0
    sigma_db: float = 3.0
    sensitivity_dbm: float = -85.0
    transition_db: float = 1.5
    q_max: float = 0.98

    def __post_init__(self):
        if self.d0 <= 0 or self.exponent <= 0 or self.sigma_db < 0 or self.transition_db <= 0:
            raise TopologyError("invalid link model parameters")
        if not 0 < self.q_max <= 1:
            raise TopologyError("q_max must lie in (0, 1]")

    def quality(self, dist, shadow_db=0.0):
        d = np.maximum(np.asarray(dist, dtype=float), self.d0)
        prx = self.tx_power_dbm - self.pl0_db - 10 * self.exponent * np.log10(d / self.d0) - shadow_db
        margin = (prx - self.sensitivity_dbm) / self.transition_db
        return self.q_max / (1.0 + np.exp(-np.clip(margin, -700, 700)))


@dataclass(frozen=True)
class ConnectivityGraph:
    n: int
    sink: int
    q: np.ndarray  # q[tx, rx], reception ratio from row node to column node
    positions: np.ndarray | None = None

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape != (self.n, self.n):
            raise TopologyError("q must be n x n")
        if np.any(np.diag(q) != 0) or np.any(q < 0) or np.any(q > 1):
            raise TopologyError("q needs a zero diagonal and entries in [0, 1]")
        if not 0 <= self.sink < self.n:
            raise TopologyError("sink out of range")
        object.__setattr__(self, "q", q)

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# n={self.n},sink={self.sink}\n")
            w = csv.writer(fh)
            w.writerow(["tx_id", "rx_id", "q"])
            for tx, rx in zip(*np.nonzero(self.q)):
                w.writerow([int(tx), int(rx), repr(float(self.q[tx, rx]))])

    @classmethod
    def load(cls, path, n: int | None = None, sink: int | None = None) -> "ConnectivityGraph":
        meta, rows = {}, []
        for line in Path(path).read_text().splitlines():
            if line.startswith("#"):
                for kv in line[1:].split(","):
                    key, _, val = kv.partition("=")
                    if val:
                        meta[key.strip()] = int(val)
                continue
            if line.strip() and not line.startswith("tx_id"):
                tx, rx, qv = line.split(",")
                rows.append((int(tx), int(rx), float(qv)))
        n = n if n is not None else meta.get("n", 1 + max(max(tx, rx) for tx, rx, _ in rows))
        sink = sink if sink is not None else meta.get("sink", 0)
        q = np.zeros((n, n))
        for tx, rx, qv in rows:
            q[tx, rx] = qv
        return cls(n, sink, q)


@dataclass(frozen=True)
class MinHopTree:
    parent: np.ndarray  # parent[sink] == sink, -1 when disconnected
    depth: np.ndarray  # hop count, inf when disconnected
    sink: int

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def connected(self) -> np.ndarray:
        return np.isfinite(self.depth)

    @property
    def mean_depth(self) -> float:
        """Average hops to the sink over connected non-sink nodes."""
        mask = self.connected.copy()
        mask[self.sink] = False
        return float(self.depth[mask].mean()) if mask.any() else 0.0

    def path_to_sink(self, node: int) -> list[int]:
        if not self.connected[node]:
            return [node]
        path = [node]
        while path[-1] != self.sink:
            path.append(int(self.parent[path[-1]]))
        return path

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "parent", "depth"])
            for v in range(self.n):
                d = self.depth[v]
                w.writerow([v, int(self.parent[v]), int(d) if np.isfinite(d) else "inf"])


def generate_topology(
    seed: int,
    n: int = 135,
    side: float = 140.0,
    model: LinkModel | None = None,
    sink: int = 0,
    sink_at_center: bool = True,
) -> ConnectivityGraph:
    """Random placement on a ``side`` x ``side`` square with shadowed links."""
    if n < 2:
        raise TopologyError("need at least 2 nodes")
    if side <= 0:
        raise TopologyError("side must be positive")
    if not 0 <= sink < n:
        raise TopologyError("sink out of range")
    model = model or LinkModel()
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2)) * side
    if sink_at_center:
        pos[sink] = side / 2
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    shadow = rng.normal(0.0, model.sigma_db, (n, n))
    q = model.quality(dist, shadow)
    np.fill_diagonal(q, 0.0)
    return ConnectivityGraph(n, sink, q, pos)


def profile_links(graph: ConnectivityGraph, rounds: int, seed: int = 0) -> ConnectivityGraph:
    """Each node sends ``rounds`` probes; measured quality is the received fraction."""
    if rounds < 1:
        raise TopologyError("rounds must be >= 1")
    rng = np.random.default_rng(seed)
    received = rng.binomial(rounds, graph.q)
    return ConnectivityGraph(graph.n, graph.sink, received / rounds, graph.positions)


def build_connectivity_edges(graph: ConnectivityGraph, theta: float = DEFAULT_THETA) -> np.ndarray:
    """Undirected adjacency: both directions must reach ``theta``."""
    if not 0 < theta <= 1:
        raise TopologyError("theta must lie in (0, 1]")
    adj = np.minimum(graph.q, graph.q.T) >= theta
    np.fill_diagonal(adj, False)
    return adj


def build_min_hop_tree(adjacency: np.ndarray, sink: int, quality: np.ndarray | None = None) -> MinHopTree:
    """Breadth-first layering from the sink.

    A node's parent is the neighbour one layer closer with the best
    ``quality[node, parent]``; remaining ties go to the lowest id.
    """
    adj = np.asarray(adjacency, dtype=bool)
    n = adj.shape[0]
    if not 0 <= sink < n:
        raise TopologyError("sink out of range")
    if quality is None:
        quality = np.zeros((n, n))

    depth = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=int)
    depth[sink] = 0
    parent[sink] = sink
    frontier = [sink]
    while frontier:
        layer = depth[frontier[0]] + 1
        nxt = sorted({int(v) for u in frontier for v in np.flatnonzero(adj[u]) if not np.isfinite(depth[v])})
        for v in nxt:
            depth[v] = layer
        for v in nxt:
            cands = [u for u in frontier if adj[v, u]]
            parent[v] = max(cands, key=lambda u: (quality[v, u], -u))
        frontier = nxt
    return MinHopTree(parent, depth, sink)


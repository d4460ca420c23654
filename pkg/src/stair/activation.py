"""Per-node active sets: which sources' floods each node relays.

``member[v, s]`` is true when node ``v`` joins floods initiated by ``s``.
Width 1 keeps only the tree path from ``s`` to the sink; every further
width adds one augmentation pass of redundant relays along that path.
"""

from __future__ import annotations

import csv
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from stair.topology import ConnectivityGraph, MinHopTree

log = logging.getLogger(__name__)

MAGIC = b"STAIRAS"
MAX_NODES = 1024
GLOSSY = "glossy"
_GLOSSY_CODE = 0


class ActivationError(ValueError):
    pass


@dataclass(frozen=True)
class ActiveSets:
    n: int
    member: np.ndarray  # bool [node, source]
    width: int | str = 1

    def __post_init__(self):
        member = np.asarray(self.member, dtype=bool)
        if member.shape != (self.n, self.n):
            raise ActivationError("member must be n x n")
        object.__setattr__(self, "member", member)

    def participants(self, source: int) -> np.ndarray:
        return self.member[:, source]

    def sources_of(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.member[node])

    def set_sizes(self) -> np.ndarray:
        """Number of participants in each source's flood."""
        return self.member.sum(axis=0)

    def save(self, path) -> None:
        code = _GLOSSY_CODE if self.width == GLOSSY else int(self.width)
        rows = encode_bitmap(self)
        with open(path, "wb") as fh:
            fh.write(MAGIC + struct.pack("<HH", self.n, code))
            for row in rows:
                fh.write(row)

    @classmethod
    def load(cls, path) -> "ActiveSets":
        raw = Path(path).read_bytes()
        if not raw.startswith(MAGIC):
            raise ActivationError("not an active-set bitmap file")
        n, code = struct.unpack_from("<HH", raw, len(MAGIC))
        body = raw[len(MAGIC) + 4 :]
        stride = (n + 7) // 8
        if len(body) != n * stride:
            raise ActivationError("bitmap length does not match header")
        rows = [body[i * stride : (i + 1) * stride] for i in range(n)]
        return decode_bitmap(rows, n, GLOSSY if code == _GLOSSY_CODE else code)

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "source"])
            for v, s in zip(*np.nonzero(self.member)):
                w.writerow([int(v), int(s)])


def initial_active_sets(tree: MinHopTree) -> ActiveSets:
    """Width-1 sets: a node relays for itself and its tree descendants.

    Equivalently, each source's flood uses exactly the tree path from the
    source to the sink.
    """
    n = tree.n
    member = np.zeros((n, n), dtype=bool)
    lonely = []
    for s in range(n):
        member[s, s] = True
        if not tree.connected[s]:
            lonely.append(s)
            continue
        member[tree.path_to_sink(s), s] = True
    if lonely:
        log.warning("%d disconnected sources get singleton active sets: %s", len(lonely), lonely)
    return ActiveSets(n, member, 1)


def augment_active_sets(
    sets: ActiveSets, graph: ConnectivityGraph, tree: MinHopTree, width: int | None = None
) -> ActiveSets:
    """One augmentation pass, raising the width by one.

    For every source, walk its tree path towards the sink.  For each hop
    ``(child, parent)`` add the inactive node ``x`` maximizing
    ``q[child, x] * q[x, parent]``, provided that product is positive.
    """
    if sets.width == GLOSSY:
        raise ActivationError("cannot augment glossy sets")
    new_width = sets.width + 1
    if width is not None and width != new_width:
        raise ActivationError(f"sets at width {sets.width} augment to {new_width}, not {width}")
    q = graph.q
    member = sets.member.copy()
    for s in range(sets.n):
        if not tree.connected[s] or s == tree.sink:
            continue
        path = tree.path_to_sink(s)
        for child, parent in zip(path[:-1], path[1:]):
            score = q[child] * q[:, parent]
            score[member[:, s]] = -1.0
            x = int(np.argmax(score))
            if score[x] > 0:
                member[x, s] = True
    return ActiveSets(sets.n, member, new_width)


def build_active_sets(graph: ConnectivityGraph, tree: MinHopTree, width: int) -> ActiveSets:
    if width < 1:
        raise ActivationError("width must be >= 1")
    sets = initial_active_sets(tree)
    while sets.width < width:
        sets = augment_active_sets(sets, graph, tree)
    return sets


def encode_bitmap(sets: ActiveSets) -> list[bytes]:
    """Per-node bitmaps; bit ``i`` (little-endian within each byte) is source ``i``."""
    if sets.n > MAX_NODES:
        raise ActivationError(f"at most {MAX_NODES} nodes supported")
    return [np.packbits(row, bitorder="little").tobytes() for row in sets.member]


def decode_bitmap(rows, n: int, width: int | str = 1) -> ActiveSets:
    stride = (n + 7) // 8
    if len(rows) != n or any(len(r) != stride for r in rows):
        raise ActivationError(f"expected {n} rows of {stride} bytes")
    bits = np.unpackbits(np.frombuffer(b"".join(rows), dtype=np.uint8).reshape(n, stride), axis=1, bitorder="little")
    return ActiveSets(n, bits[:, :n].astype(bool), width)

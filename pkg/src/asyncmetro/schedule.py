"""Shared randomness of the coupling: Poisson update times, proposals, and coins.

One master seed splits into per-node independent streams keyed by node id;
each stream yields exponential clock gaps, then proposals, then coins. A
node's draws are therefore invariant to the graph size and to other nodes'
randomness. The global processing order is the strict total order on
(time, node, index), which breaks exact time ties deterministically.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from typing import IO, NamedTuple

import numpy as np

from .models import SpinModel


class UpdateId(NamedTuple):
    node: int
    index: int  # 1-based ordinal within the node


class UpdateSchedule:
    """Per-node update times in (0, T), proposals, and uniform-[0,1) coins."""

    __slots__ = ("T", "seed", "n", "q", "times", "proposals", "coins")

    def __init__(self, T, seed, n, q, times, proposals, coins):
        self.T = float(T)
        self.seed = seed
        self.n = n
        self.q = q
        self.times = times          # list of float64 arrays, strictly increasing
        self.proposals = proposals  # list of int64 arrays
        self.coins = coins          # list of float64 arrays in [0, 1)
        self._validate()

    def _validate(self) -> None:
        if len(self.times) != self.n or len(self.proposals) != self.n or len(self.coins) != self.n:
            raise ValueError("per-node arrays must all have length n")
        for v in range(self.n):
            t, p, b = self.times[v], self.proposals[v], self.coins[v]
            if not (len(t) == len(p) == len(b)):
                raise ValueError(f"node {v}: times/proposals/coins lengths differ")
            if len(t) and (t[0] <= 0.0 or t[-1] >= self.T):
                raise ValueError(f"node {v}: update times must lie in (0, T)")
            if np.any(np.diff(t) <= 0.0):
                raise ValueError(f"node {v}: update times must be strictly increasing")
            if len(p) and (p.min() < 0 or p.max() >= self.q):
                raise ValueError(f"node {v}: proposals out of range 0..{self.q - 1}")
            if len(b) and (b.min() < 0.0 or b.max() >= 1.0):
                raise ValueError(f"node {v}: coins out of [0, 1)")

    @property
    def counts(self) -> list[int]:
        return [len(t) for t in self.times]

    @property
    def total_updates(self) -> int:
        return sum(len(t) for t in self.times)

    def __repr__(self) -> str:
        return f"UpdateSchedule(n={self.n}, T={self.T}, seed={self.seed}, updates={self.total_updates})"


def _poisson_times(rng: np.random.Generator, T: float) -> np.ndarray:
    """Rate-1 Poisson arrival times strictly inside (0, T)."""
    if T <= 0.0:
        return np.empty(0)
    out: list[float] = []
    total = 0.0
    block = max(16, int(2 * T) + 8)
    while True:
        cs = total + np.cumsum(rng.exponential(1.0, block))
        stop = int(np.searchsorted(cs, T, side="left"))  # first arrival >= T
        if stop < block:
            out.extend(cs[:stop].tolist())
            return np.asarray(out)
        out.extend(cs.tolist())
        total = float(cs[-1])


def generate(model: SpinModel, T: float, seed: int) -> UpdateSchedule:
    """Draw the full shared randomness for (model, T, seed); fully deterministic."""
    if T < 0:
        raise ValueError(f"time horizon must be >= 0, got {T}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    n, q = model.n, model.q
    times, proposals, coins = [], [], []
    for v in range(n):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), v)))
        t = _poisson_times(rng, float(T))
        m = len(t)
        cdf = np.cumsum(model.proposals[v])
        props = np.searchsorted(cdf, rng.random(m), side="right")
        np.minimum(props, q - 1, out=props)  # guard against cdf tail rounding below 1
        times.append(t)
        proposals.append(props.astype(np.int64))
        coins.append(rng.random(m))
    return UpdateSchedule(float(T), int(seed), n, q, times, proposals, coins)


def total_order(schedule: UpdateSchedule) -> list[UpdateId]:
    """All updates sorted by the strict total order (time, node, index)."""
    keyed = [
        (t, v, i + 1)
        for v in range(schedule.n)
        for i, t in enumerate(schedule.times[v].tolist())
    ]
    keyed.sort()
    return [UpdateId(v, i) for (_, v, i) in keyed]


def updates_before(times, u: int, t: float, querying_node: int) -> int:
    """Count of node u's updates strictly before the order key (t, querying_node).

    Exact time ties across nodes break toward the smaller node id.
    """
    if u < querying_node:
        return bisect_right(times, t)
    return bisect_left(times, t)


def dump(schedule: UpdateSchedule, fh: IO[str]) -> None:
    """Line-oriented text form: header "n T seed", then "node index time proposal coin"."""
    fh.write(f"{schedule.n} {schedule.T!r} {schedule.seed}\n")
    for v in range(schedule.n):
        t = schedule.times[v].tolist()
        p = schedule.proposals[v].tolist()
        b = schedule.coins[v].tolist()
        for i in range(len(t)):
            fh.write(f"{v} {i + 1} {t[i]!r} {p[i]} {b[i]!r}\n")


def load(fh: IO[str], q: int) -> UpdateSchedule:
    """Inverse of dump(); q is needed to re-validate proposals."""
    header = fh.readline().split()
    if len(header) != 3:
        raise ValueError(f"bad schedule header: {header!r}")
    n, T, seed = int(header[0]), float(header[1]), int(header[2])
    per_node: list[list[tuple[int, float, int, float]]] = [[] for _ in range(n)]
    for line in fh:
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"bad schedule line: {line!r}")
        v, i = int(parts[0]), int(parts[1])
        if not 0 <= v < n:
            raise ValueError(f"node {v} out of range")
        per_node[v].append((i, float(parts[2]), int(parts[3]), float(parts[4])))
    times, proposals, coins = [], [], []
    for v in range(n):
        rows = sorted(per_node[v])
        if [i for i, *_ in rows] != list(range(1, len(rows) + 1)):
            raise ValueError(f"node {v}: update indices are not 1..m")
        times.append(np.asarray([r[1] for r in rows]))
        proposals.append(np.asarray([r[2] for r in rows], dtype=np.int64))
        coins.append(np.asarray([r[3] for r in rows]))
    return UpdateSchedule(T, seed, n, q, times, proposals, coins)

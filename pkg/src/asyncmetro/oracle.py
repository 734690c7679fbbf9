"""Sequential reference chains and exhaustive distributions for small instances."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import IO, Callable, Sequence

import numpy as np

from .models import SpinModel, _SPIN
from .schedule import UpdateSchedule

_EXACT_TABLE_LIMIT = 10**6


@dataclass(frozen=True)
class TrajectoryStep:
    node: int
    index: int  # 1-based update ordinal at the node
    time: float
    new_state: int


@dataclass
class ContinuousRun:
    final: np.ndarray
    trajectory: list[TrajectoryStep]


def configuration_at(
    schedule: UpdateSchedule, y0: Sequence[int], trajectory: list[TrajectoryStep], t: float
) -> np.ndarray:
    """Chain state at an arbitrary time: each node holds the value set by its
    last update with time <= t (right-open interval convention), else its
    initial value."""
    if not 0.0 <= t <= schedule.T:
        raise ValueError(f"query time {t} outside [0, {schedule.T}]")
    cur = list(_validate_configuration_length(schedule.n, y0))
    for step in trajectory:
        if step.time > t:
            break
        cur[step.node] = step.new_state
    return np.asarray(cur, dtype=np.int64)


def _validate_configuration_length(n: int, config: Sequence[int]) -> list[int]:
    if len(config) != n:
        raise ValueError(f"configuration has length {len(config)}, expected {n}")
    return [int(x) for x in config]


def _validate_configuration(model: SpinModel, config: Sequence[int]) -> list[int]:
    if len(config) != model.n:
        raise ValueError(f"configuration has length {len(config)}, model has n={model.n}")
    out = [int(x) for x in config]
    for v, x in enumerate(out):
        if not 0 <= x < model.q:
            raise ValueError(f"state {x} at node {v} out of range 0..{model.q - 1}")
    return out


def run_continuous(model: SpinModel, schedule: UpdateSchedule, y0: Sequence[int]) -> ContinuousRun:
    """Drive the continuous-time chain with the schedule's randomness.

    Updates are processed in the (time, node, index) order; the update (v, i)
    with current state c and proposal c' is accepted iff the coin satisfies
    beta < f(v, c, c', neighborhood) evaluated at the pre-update neighborhood.
    """
    if schedule.n != model.n:
        raise ValueError(f"schedule has n={schedule.n}, model has n={model.n}")
    if schedule.q != model.q:
        raise ValueError(f"schedule has q={schedule.q}, model has q={model.q}")
    cur = _validate_configuration(model, y0)
    keyed = [
        (t, v, i)
        for v in range(schedule.n)
        for i, t in enumerate(schedule.times[v].tolist(), start=1)
    ]
    keyed.sort()
    adj = model.graph.adj
    filt = model._filter_raw
    proposals = [p.tolist() for p in schedule.proposals]
    coins = [b.tolist() for b in schedule.coins]
    trajectory = []
    for t, v, i in keyed:
        c_new = proposals[v][i - 1]
        tau = [cur[u] for u in adj[v]]
        if coins[v][i - 1] < filt(v, cur[v], c_new, tau):
            cur[v] = c_new
        trajectory.append(TrajectoryStep(v, i, t, cur[v]))
    return ContinuousRun(np.asarray(cur, dtype=np.int64), trajectory)


def run_discrete(
    model: SpinModel,
    n_steps: int,
    seed: int,
    x0: Sequence[int],
    observer: Callable[[int, list[int]], None] | None = None,
) -> np.ndarray:
    """Discrete single-site Metropolis chain: uniform node, proposal from nu_v,
    accept iff a fresh uniform coin is below the filter."""
    if n_steps < 0:
        raise ValueError(f"step count must be >= 0, got {n_steps}")
    cur = _validate_configuration(model, x0)
    rng = np.random.default_rng(seed)
    adj = model.graph.adj
    filt = model._filter_raw
    cdfs = [np.cumsum(model.proposals[v]) for v in range(model.n)]
    qm1 = model.q - 1
    for step in range(n_steps):
        v = int(rng.integers(model.n))
        c_new = min(int(np.searchsorted(cdfs[v], rng.random(), side="right")), qm1)
        tau = [cur[u] for u in adj[v]]
        if rng.random() < filt(v, cur[v], c_new, tau):
            cur[v] = c_new
        if observer is not None:
            observer(step + 1, cur)
    return np.asarray(cur, dtype=np.int64)


def default_weight(model: SpinModel) -> Callable[[Sequence[int]], float]:
    """Unnormalized stationary weight for the built-in model kinds."""
    edges = list(model.graph.edges())
    if model.kind == "coloring":
        def weight(config):
            return 1.0 if all(config[u] != config[v] for u, v in edges) else 0.0
        return weight
    if model.kind == "hardcore":
        lam = model.params["lam"]
        def weight(config):
            if any(config[u] + config[v] > 1 for u, v in edges):
                return 0.0
            return lam ** sum(config)
        return weight
    if model.kind == "ising":
        beta = model.params["beta"]
        def weight(config):
            return math.exp(beta * sum(_SPIN[config[u]] * _SPIN[config[v]] for u, v in edges))
        return weight
    raise ValueError(f"no default weight for model kind {model.kind!r}; pass one explicitly")


def exact_distribution(
    model: SpinModel, weight: Callable[[Sequence[int]], float] | None = None
) -> dict[tuple[int, ...], float]:
    """Exhaustive normalized distribution over [q]^V; zero-mass states are omitted.

    Guarded by q^n <= 1e6.
    """
    if model.q ** model.n > _EXACT_TABLE_LIMIT:
        raise ValueError(
            f"state space too large: {model.q}^{model.n} exceeds {_EXACT_TABLE_LIMIT}"
        )
    if weight is None:
        weight = default_weight(model)
    table: dict[tuple[int, ...], float] = {}
    z = 0.0
    for config in itertools.product(range(model.q), repeat=model.n):
        w = weight(config)
        if w < 0.0:
            raise ValueError(f"negative weight {w!r} at {config}")
        if w > 0.0:
            table[config] = w
            z += w
    if z == 0.0:
        raise ValueError("weight function assigns zero mass everywhere")
    return {config: w / z for config, w in table.items()}


def total_variation(p: dict[tuple[int, ...], float], q: dict[tuple[int, ...], float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


@dataclass(frozen=True)
class PoissonBridge:
    """Pois(nT) step-count summary linking the continuous and discrete chains."""

    mean: float

    def lower_tail(self, eps: float) -> float:
        """Bound on Pr[N <= (1-eps)*mean] for 0 <= eps < 1."""
        if not 0.0 <= eps < 1.0:
            raise ValueError(f"eps must lie in [0, 1), got {eps}")
        return math.exp(-eps * eps * self.mean / 2.0)

    def upper_tail(self, eps: float) -> float:
        """Bound on Pr[N >= (1+eps)*mean] for 0 <= eps < 1."""
        if not 0.0 <= eps < 1.0:
            raise ValueError(f"eps must lie in [0, 1), got {eps}")
        return math.exp(-eps * eps * self.mean / 3.0)

    def far_tail(self, t: float) -> float:
        """Bound 2^-t on Pr[N >= t], valid only for t >= 5*mean."""
        if t < 5.0 * self.mean:
            raise ValueError(f"far tail bound needs t >= 5*mean = {5.0 * self.mean}, got {t}")
        return 2.0 ** (-t)


def discrete_continuous_bridge(T: float, n: int) -> PoissonBridge:
    """Y_T matches X_N for N ~ Pois(n*T); summarize that step count."""
    if T <= 0 or n <= 0:
        raise ValueError(f"need T > 0 and n > 0, got T={T}, n={n}")
    return PoissonBridge(mean=float(n) * float(T))


def horizon_for_steps(T: float, n: int) -> float:
    """Continuous horizon T' = 2T + 8 ln n giving >= nT discrete steps whp."""
    if T < 0 or n < 1:
        raise ValueError(f"need T >= 0 and n >= 1, got T={T}, n={n}")
    return 2.0 * T + 8.0 * math.log(n)


def write_trajectory(trajectory: list[TrajectoryStep], fh: IO[str]) -> None:
    """Debug diff format: one "node index time new_state" line per update."""
    for step in trajectory:
        fh.write(f"{step.node} {step.index} {step.time!r} {step.new_state}\n")

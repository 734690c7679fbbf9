"""Discrete-event simulation of the two-phase asynchronous protocol.

The network is the model graph with one reliable FIFO channel per directed
edge; every message is delivered within one virtual time unit, with the exact
delay in (0, 1] chosen by a pluggable scheduler. Phase I ships each node's
initial value and update list to its neighbors (serialized on the channel,
one fragment per update); a node enters Phase II once every neighbor's info
has fully arrived, then resolves its updates in order. An update resolves as
soon as the coupled coin beta falls below the minimum acceptance probability
P_AC or at/above 1 - P_RE, both computed over the product of per-neighbor
possible-state sets; each received Accept/Reject narrows those sets and
retriggers the test.

Local computation is instantaneous in virtual time; the virtual clock is a
separate axis from the chain's Poisson time in [0, T].
"""

from __future__ import annotations

import itertools
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import IO, Iterable, Sequence

import numpy as np

from .models import SpinModel, _clamp
from .schedule import UpdateSchedule, UpdateId

DECISION_BITS = 1

_INFO = 0
_DEC = 1


class SimulationInvariantError(RuntimeError):
    """An internal protocol invariant failed; signals a simulator bug."""


# ---------------------------------------------------------------------------
# delay schedulers

class Scheduler:
    """Per-message delay policy. Every delay must lie in (0, 1]."""

    def delay(self, src: int, dst: int, kind: str, seq: int) -> float:
        raise NotImplementedError


class SynchronousScheduler(Scheduler):
    """Benign lock-step scheduler: every delay is exactly one time unit."""

    def delay(self, src, dst, kind, seq):
        return 1.0


class AdversarialMaxScheduler(Scheduler):
    """Maximal-delay adversary (all delays 1); kept separate from Synchronous
    as the anchor point for future adaptive policies."""

    def delay(self, src, dst, kind, seq):
        return 1.0


class UniformRandomScheduler(Scheduler):
    """I.i.d. delays uniform on (0, 1]."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def delay(self, src, dst, kind, seq):
        return 1.0 - float(self._rng.random())


class FixedDelayScheduler(Scheduler):
    """Constant delay per directed channel, from a table with a default."""

    def __init__(self, default: float = 1.0, table: dict[tuple[int, int], float] | None = None):
        self.default = default
        self.table = dict(table or {})

    def delay(self, src, dst, kind, seq):
        return self.table.get((src, dst), self.default)


SCHEDULER_POLICIES = ("synchronous", "uniform", "adversarial-max", "fixed")


def make_scheduler(policy: str, seed: int = 0, **kwargs) -> Scheduler:
    if policy == "synchronous":
        return SynchronousScheduler()
    if policy in ("uniform", "uniform-random"):
        return UniformRandomScheduler(seed)
    if policy == "adversarial-max":
        return AdversarialMaxScheduler()
    if policy == "fixed":
        return FixedDelayScheduler(**kwargs)
    raise ValueError(f"unknown scheduler policy {policy!r}; expected one of {SCHEDULER_POLICIES}")


# ---------------------------------------------------------------------------
# message-size accounting
#
# Sizes are charged by a fixed formula rather than an encoded wire format:
# timestamps ride at the n^-4 resolution that keeps update times of adjacent
# nodes distinct whp (4 id-widths), plus a sender id, the integer part of the
# time, and the proposal. Decisions are a single bit.

def _ilog2(x: int) -> int:
    return max(1, math.ceil(math.log2(x))) if x > 1 else 1


def phase1_update_bits(n: int, T: float, q: int) -> int:
    """Accounted size of one Phase-I update fragment (also the max message size)."""
    return 5 * _ilog2(n) + _ilog2(math.ceil(T) + 1) + _ilog2(q)


def phase1_init_bits(n: int, q: int) -> int:
    """Accounted size of the initial-value fragment of a PhaseOneInfo message."""
    return _ilog2(n) + _ilog2(q)


# ---------------------------------------------------------------------------
# possible-state sets and resolution thresholds

def possible_states(
    u: int,
    t: float,
    j_u: int,
    hist_u: Sequence[int],
    times_u: Sequence[float],
    proposals_u: Sequence[int],
    querying_node: int | None = None,
    horizon: float | None = None,
) -> frozenset[int]:
    """Set of states neighbor u may hold at time t, given its resolved prefix.

    hist_u holds the j_u known post-update states of u (index 0 is the initial
    value). If t falls before u's j_u-th update the state is pinned to the
    resolved history; otherwise the set is the last known state plus every
    proposal of u with update time in [t_u^{j_u}, t]. Exact time ties against
    t break by node id when querying_node is given (smaller id counts as
    earlier), else inclusively.
    """
    if horizon is not None and not 0.0 <= t < horizon:
        raise ValueError(f"query time {t} outside [0, {horizon})")
    if j_u < 1:
        raise ValueError(f"j_u must be >= 1, got {j_u}")
    if len(hist_u) != j_u:
        raise ValueError(f"hist has {len(hist_u)} entries, expected j_u = {j_u}")
    if j_u > len(times_u) + 1:
        raise ValueError(f"j_u = {j_u} exceeds update count {len(times_u)} + 1")
    times_u = list(times_u)
    if querying_node is None or u < querying_node:
        idx = bisect_right(times_u, t)
    else:
        idx = bisect_left(times_u, t)
    if idx < j_u:
        return frozenset((hist_u[idx],))
    return frozenset((hist_u[j_u - 1], *list(proposals_u)[j_u - 1 : idx]))


def _check_state_sets(model: SpinModel, v: int, neighbor_states) -> list[tuple[int, ...]]:
    adj = model.graph.adj[v]
    if len(neighbor_states) != len(adj):
        raise ValueError(f"need {len(adj)} state sets for node {v}, got {len(neighbor_states)}")
    out = []
    for S in neighbor_states:
        S = tuple(sorted(set(S)))
        if not S:
            raise SimulationInvariantError(f"empty possible-state set at node {v}")
        if S[0] < 0 or S[-1] >= model.q:
            raise ValueError(f"state set {S} out of range 0..{model.q - 1}")
        out.append(S)
    return out


def thresholds(
    model: SpinModel, v: int, c: int, c_new: int, neighbor_states: Sequence[Iterable[int]]
) -> tuple[float, float]:
    """(P_AC, P_RE) for resolving node v's move c -> c_new under the given
    per-neighbor possible-state sets (sorted-adjacency order).

    Uses the per-edge min/max closed form when the model has edge factors,
    otherwise falls back to enumeration of the product space.
    """
    sets = _check_state_sets(model, v, neighbor_states)
    if not model.has_edge_factors:
        return thresholds_bruteforce(model, v, c, c_new, sets)
    factor = model.edge_factor_fn
    pmin = pmax = 1.0
    for u, S in zip(model.graph.adj[v], sets):
        lo = hi = factor(v, u, c, c_new, S[0])
        for b in S[1:]:
            x = factor(v, u, c, c_new, b)
            if x < lo:
                lo = x
            elif x > hi:
                hi = x
        pmin = _clamp(pmin * lo)
        pmax = _clamp(pmax * hi)
    pac = pmin if pmin < 1.0 else 1.0
    pre = 1.0 - (pmax if pmax < 1.0 else 1.0)
    return pac, pre


def thresholds_bruteforce(
    model: SpinModel, v: int, c: int, c_new: int, neighbor_states: Sequence[Iterable[int]]
) -> tuple[float, float]:
    """Reference thresholds by explicit enumeration of the product of state sets."""
    sets = _check_state_sets(model, v, neighbor_states)
    filt = model._filter_raw
    lo, hi = 1.0, 0.0
    for tau in itertools.product(*sets):
        f = filt(v, c, c_new, tau)
        if f < lo:
            lo = f
        if f > hi:
            hi = f
    return lo, 1.0 - hi


# ---------------------------------------------------------------------------
# run records

@dataclass(frozen=True)
class Resolution:
    """One resolved update, with what triggered it (None = self-triggered)."""

    node: int
    index: int
    accepted: bool
    vtime: float
    trigger: UpdateId | None


@dataclass
class RunStats:
    makespan: float
    phase1_end: float
    residence: np.ndarray          # per-node Phase-II residence R_v, time units
    entry_times: np.ndarray
    termination_times: np.ndarray
    phase1_messages: int           # logical PhaseOneInfo messages = 2|E|
    phase1_fragments: int
    decision_messages: int
    total_bits: int
    max_message_bits: int

    @property
    def message_count(self) -> int:
        return self.phase1_messages + self.decision_messages

    def same_as(self, other: "RunStats") -> bool:
        return (
            self.makespan == other.makespan
            and self.phase1_end == other.phase1_end
            and np.array_equal(self.residence, other.residence)
            and np.array_equal(self.entry_times, other.entry_times)
            and np.array_equal(self.termination_times, other.termination_times)
            and self.phase1_messages == other.phase1_messages
            and self.phase1_fragments == other.phase1_fragments
            and self.decision_messages == other.decision_messages
            and self.total_bits == other.total_bits
            and self.max_message_bits == other.max_message_bits
        )


@dataclass
class SimulationResult:
    final: np.ndarray
    stats: RunStats
    resolutions: list[Resolution]
    trace: list[tuple] | None
    schedule: UpdateSchedule = field(repr=False)


class _Channel:
    __slots__ = ("last_deliver", "seq")

    def __init__(self):
        self.last_deliver = 0.0
        self.seq = 0


class _Node:
    __slots__ = (
        "vid", "nbrs", "m", "times", "proposals", "coins", "phase", "value",
        "i", "t", "beta", "c_new", "j", "hist", "fmin", "fmax", "S",
        "pending", "info_pending", "entry", "term", "done",
    )

    def __init__(self, vid, nbrs, times, proposals, coins, y0):
        self.vid = vid
        self.nbrs = nbrs
        self.times = times
        self.proposals = proposals
        self.coins = coins
        self.m = len(times)
        self.phase = 1
        self.value = y0
        self.i = 0
        self.t = 0.0
        self.beta = 0.0
        self.c_new = 0
        self.j: dict[int, int] = {}
        self.hist: dict[int, list[int]] = {}
        self.fmin: dict[int, float] = {}
        self.fmax: dict[int, float] = {}
        self.S: dict[int, tuple[int, ...]] = {}
        self.pending: list[tuple[int, bool, int]] = []
        self.info_pending = len(nbrs)
        self.entry = math.inf
        self.term = math.inf
        self.done = False


class Simulation:
    """One deterministic execution of the protocol for a fixed schedule.

    All nondeterminism lives in the schedule and the scheduler seed; event
    deliveries are processed in virtual-time order with the
    (vtime, src, dst, sequence) tie-break.
    """

    def __init__(
        self,
        model: SpinModel,
        schedule: UpdateSchedule,
        y0: Sequence[int],
        scheduler: Scheduler,
        collect_trace: bool = False,
        paranoid: bool = False,
    ):
        if schedule.n != model.n or schedule.q != model.q:
            raise ValueError(
                f"schedule (n={schedule.n}, q={schedule.q}) does not match model (n={model.n}, q={model.q})"
            )
        if len(y0) != model.n:
            raise ValueError(f"initial configuration has length {len(y0)}, expected {model.n}")
        self.y0 = [int(x) for x in y0]
        for v, x in enumerate(self.y0):
            if not 0 <= x < model.q:
                raise ValueError(f"initial state {x} at node {v} out of range 0..{model.q - 1}")
        self.model = model
        self.schedule = schedule
        self.scheduler = scheduler
        self.paranoid = paranoid
        self.factor = model.edge_factor_fn
        self.times_l = [t.tolist() for t in schedule.times]
        self.props_l = [p.tolist() for p in schedule.proposals]
        coins_l = [b.tolist() for b in schedule.coins]
        adj = model.graph.adj
        self.nodes = [
            _Node(v, adj[v], self.times_l[v], self.props_l[v], coins_l[v], self.y0[v])
            for v in range(model.n)
        ]
        self.heap: list[tuple] = []
        self.channels: dict[tuple[int, int], _Channel] = {}
        self.resolutions: list[Resolution] = []
        self.trace: list[tuple] | None = [] if collect_trace else None
        self.phase1_messages = 0
        self.phase1_fragments = 0
        self.decision_messages = 0
        self.total_bits = 0
        self.max_message_bits = 0
        self._executed = False

    # -- channel plumbing ---------------------------------------------------

    def _delay(self, src: int, dst: int, kind: str, seq: int) -> float:
        d = self.scheduler.delay(src, dst, kind, seq)
        if not 0.0 < d <= 1.0:
            raise ValueError(f"scheduler produced delay {d!r} outside (0, 1]")
        return d

    def _schedule_phase1(self) -> None:
        n, T, q = self.model.n, self.schedule.T, self.model.q
        init_bits = phase1_init_bits(n, q)
        update_bits = phase1_update_bits(n, T, q)
        for u in range(n):
            m_u = len(self.times_l[u])
            for v in self.model.graph.adj[u]:
                # info fragments are serialized on the channel: the logical
                # PhaseOneInfo message lands when the last fragment does
                t = 0.0
                for frag in range(m_u + 1):
                    t += self._delay(u, v, "info", frag)
                ch = _Channel()
                ch.last_deliver = t
                ch.seq = 1
                self.channels[(u, v)] = ch
                heappush(self.heap, (t, u, v, 0, _INFO, False, m_u + 1))
                self.phase1_messages += 1
                self.phase1_fragments += m_u + 1
                self.total_bits += init_bits + m_u * update_bits
                self.max_message_bits = max(self.max_message_bits, init_bits, update_bits if m_u else 0)

    def _record(self, vtime: float, kind: str, src: int, dst: int, payload: str) -> None:
        if self.trace is not None:
            self.trace.append((vtime, kind, src, dst, payload))

    # -- protocol handlers (Phase II) ---------------------------------------

    def enter_phase2(self, node: _Node, vtime: float) -> None:
        node.phase = 2
        node.entry = vtime
        self._record(vtime, "enter", -1, node.vid, "")
        for u in node.nbrs:
            node.j[u] = 1
            node.hist[u] = [self.y0[u]]
        if node.m == 0:
            node.done = True
            node.term = vtime
            self._record(vtime, "term", -1, node.vid, "")
        else:
            node.i = 1
            self._begin_update(node)
            self._cascade(node, vtime, None)
        pending, node.pending = node.pending, []
        for src, accepted, sidx in pending:
            self._apply_decision(node, src, accepted, sidx, vtime)

    def on_decision(self, dst: int, src: int, accepted: bool, sidx: int, vtime: float) -> None:
        node = self.nodes[dst]
        self._record(vtime, "dec", src, dst, f"accept={int(accepted)} j={sidx}")
        if node.phase == 1:
            # queued until dst enters Phase II, processed in arrival order
            node.pending.append((src, accepted, sidx))
            return
        self._apply_decision(node, src, accepted, sidx, vtime)

    def _apply_decision(self, node: _Node, src: int, accepted: bool, sidx: int, vtime: float) -> None:
        ju = node.j[src]
        if ju > len(self.times_l[src]):
            raise SimulationInvariantError(
                f"node {node.vid}: surplus decision from {src} (FIFO violation or duplicate delivery)"
            )
        if sidx != ju:
            raise SimulationInvariantError(
                f"node {node.vid}: decision from {src} out of order: expected ordinal {ju}, got {sidx}"
            )
        hist = node.hist[src]
        hist.append(self.props_l[src][ju - 1] if accepted else hist[ju - 1])
        node.j[src] = ju + 1
        if node.done:
            return  # terminated nodes keep folding decisions into history
        self._refresh_neighbor(node, src)
        self._cascade(node, vtime, (src, ju))

    def _begin_update(self, node: _Node) -> None:
        i = node.i
        node.t = node.times[i - 1]
        node.c_new = node.proposals[i - 1]
        node.beta = node.coins[i - 1]
        for u in node.nbrs:
            self._refresh_neighbor(node, u)

    def _possible(self, node: _Node, u: int) -> tuple[int, ...]:
        tu = self.times_l[u]
        t = node.t
        idx = bisect_right(tu, t) if u < node.vid else bisect_left(tu, t)
        ju = node.j[u]
        hist = node.hist[u]
        if idx < ju:
            return (hist[idx],)
        base = hist[ju - 1]
        window = self.props_l[u][ju - 1 : idx]
        if not window:
            return (base,)
        s = set(window)
        s.add(base)
        return tuple(s)

    def _refresh_neighbor(self, node: _Node, u: int) -> None:
        S = self._possible(node, u)
        if self.factor is None or self.paranoid:
            node.S[u] = S
        if self.factor is not None:
            factor = self.factor
            v, c, cn = node.vid, node.value, node.c_new
            lo = hi = factor(v, u, c, cn, S[0])
            for b in S[1:]:
                x = factor(v, u, c, cn, b)
                if x < lo:
                    lo = x
                elif x > hi:
                    hi = x
            node.fmin[u] = lo
            node.fmax[u] = hi

    def try_resolve(self, node: _Node) -> bool | None:
        """Test the two resolution conditions, accept first; None = undecided."""
        if self.factor is not None:
            pmin = pmax = 1.0
            fmin, fmax = node.fmin, node.fmax
            for u in node.nbrs:
                pmin = _clamp(pmin * fmin[u])
                pmax = _clamp(pmax * fmax[u])
            pac = pmin if pmin < 1.0 else 1.0
            acc_sup = pmax if pmax < 1.0 else 1.0  # equals 1 - P_RE
            if self.paranoid and self.model.kind == "coloring":
                self._check_coloring_conditions(node, pac, acc_sup)
            if node.beta < pac:
                return True
            if node.beta >= acc_sup:
                return False
            return None
        pac, pre = thresholds_bruteforce(
            self.model, node.vid, node.value, node.c_new, [node.S[u] for u in node.nbrs]
        )
        if node.beta < pac:
            return True
        if node.beta >= 1.0 - pre:
            return False
        return None

    def _check_coloring_conditions(self, node: _Node, pac: float, acc_sup: float) -> None:
        # the coloring specialization must coincide with the generic thresholds
        cn = node.c_new
        in_union = any(cn in node.S[u] for u in node.nbrs)
        blocked = any(node.S[u] == (cn,) for u in node.nbrs)
        if (pac == 1.0) != (not in_union) or (acc_sup == 0.0) != blocked:
            raise SimulationInvariantError(
                f"coloring condition mismatch at node {node.vid}, update {node.i}: "
                f"P_AC={pac}, 1-P_RE={acc_sup}, proposal {cn}, sets {dict(node.S)}"
            )

    def _cascade(self, node: _Node, vtime: float, trigger: tuple[int, int] | None) -> None:
        while True:
            res = self.try_resolve(node)
            if res is None:
                return
            self._finish_update(node, res, vtime, trigger)
            if node.done:
                return
            trigger = None  # later resolutions fire on their first computation

    def _finish_update(self, node: _Node, accepted: bool, vtime: float, trigger) -> None:
        i = node.i
        if accepted:
            node.value = node.proposals[i - 1]
        tid = UpdateId(*trigger) if trigger is not None else None
        self.resolutions.append(Resolution(node.vid, i, accepted, vtime, tid))
        if self.trace is not None:
            tpay = "self" if tid is None else f"{tid.node}:{tid.index}"
            self._record(vtime, "resolve", -1, node.vid, f"i={i} accept={int(accepted)} trigger={tpay}")
        for u in node.nbrs:
            self._send_decision(node.vid, u, accepted, i, vtime)
        if i == node.m:
            node.done = True
            node.term = vtime
            self._record(vtime, "term", -1, node.vid, "")
        else:
            node.i = i + 1
            self._begin_update(node)

    def _send_decision(self, src: int, dst: int, accepted: bool, idx: int, vtime: float) -> None:
        ch = self.channels[(src, dst)]
        deliver = vtime + self._delay(src, dst, "decision", ch.seq)
        if deliver < ch.last_deliver:
            # FIFO projection. Against an earlier decision this stays within
            # one unit of the send (that decision was sent no later); it can
            # exceed one unit only against the channel's Phase-I tail, which
            # lands before the receiver enters Phase II, so the late delivery
            # is absorbed by the receiver's pending queue and every delivery
            # a Phase-II node actually reacts to took at most one unit.
            deliver = ch.last_deliver
        ch.last_deliver = deliver
        heappush(self.heap, (deliver, src, dst, ch.seq, _DEC, accepted, idx))
        ch.seq += 1
        self.decision_messages += 1
        self.total_bits += DECISION_BITS
        self.max_message_bits = max(self.max_message_bits, DECISION_BITS)

    # -- main loop -----------------------------------------------------------

    def execute(self) -> SimulationResult:
        if self._executed:
            raise RuntimeError("a Simulation instance runs exactly once")
        self._executed = True
        self._schedule_phase1()
        for node in self.nodes:
            if not node.nbrs:
                self.enter_phase2(node, 0.0)
        heap = self.heap
        while heap:
            vtime, src, dst, seq, kind, flag, aux = heappop(heap)
            if kind == _INFO:
                node = self.nodes[dst]
                if self.trace is not None:
                    m_u = len(self.times_l[src])
                    init = phase1_init_bits(self.model.n, self.model.q)
                    upd = phase1_update_bits(self.model.n, self.schedule.T, self.model.q)
                    bits = init + m_u * upd
                    maxfrag = upd if m_u else init
                    self._record(vtime, "info", src, dst, f"frags={aux} bits={bits} maxfrag={maxfrag}")
                node.info_pending -= 1
                if node.info_pending == 0 and node.phase == 1:
                    self.enter_phase2(node, vtime)
            else:
                self.on_decision(dst, src, bool(flag), aux, vtime)
        stuck = [nd for nd in self.nodes if not nd.done]
        if stuck:
            raise SimulationInvariantError(self._deadlock_dump(stuck))
        return self._finalize()

    def _deadlock_dump(self, stuck: list[_Node]) -> str:
        lines = [f"event queue drained with {len(stuck)} unresolved node(s):"]
        for node in stuck[:5]:
            if node.phase == 1:
                lines.append(f"  node {node.vid}: still in Phase I ({node.info_pending} info pending)")
                continue
            sets = {u: self._possible(node, u) for u in node.nbrs}
            lines.append(
                f"  node {node.vid}: update {node.i}/{node.m}, beta={node.beta!r}, "
                f"proposal={node.c_new}, j={dict(node.j)}, possible states {sets}"
            )
        return "\n".join(lines)

    def _finalize(self) -> SimulationResult:
        n = self.model.n
        entry = np.array([nd.entry for nd in self.nodes])
        term = np.array([nd.term for nd in self.nodes])
        phase1_end = float(entry.max()) if n else 0.0
        makespan = float(term.max()) if n else 0.0
        residence = np.maximum(term - phase1_end, 0.0)
        stats = RunStats(
            makespan=makespan,
            phase1_end=phase1_end,
            residence=residence,
            entry_times=entry,
            termination_times=term,
            phase1_messages=self.phase1_messages,
            phase1_fragments=self.phase1_fragments,
            decision_messages=self.decision_messages,
            total_bits=self.total_bits,
            max_message_bits=self.max_message_bits,
        )
        final = np.array([nd.value for nd in self.nodes], dtype=np.int64)
        return SimulationResult(final, stats, self.resolutions, self.trace, self.schedule)


def run(
    model: SpinModel,
    schedule: UpdateSchedule,
    y0: Sequence[int],
    scheduler: Scheduler,
    collect_trace: bool = False,
    paranoid: bool = False,
) -> SimulationResult:
    """Execute the full two-phase protocol; returns the final configuration,
    run statistics, and per-update resolution records."""
    sim = Simulation(model, schedule, y0, scheduler, collect_trace=collect_trace, paranoid=paranoid)
    return sim.execute()


# ---------------------------------------------------------------------------
# event-trace export and replay

def write_trace(trace: list[tuple], fh: IO[str]) -> None:
    """One line per event: "vtime kind src dst payload"."""
    for vtime, kind, src, dst, payload in trace:
        fh.write(f"{vtime!r} {kind} {src} {dst} {payload}\n".rstrip() + "\n")


def replay_trace(fh: IO[str]) -> tuple[RunStats, list[Resolution]]:
    """Rebuild RunStats and resolution records from an exported event trace."""
    entry: dict[int, float] = {}
    term: dict[int, float] = {}
    resolutions: list[Resolution] = []
    phase1_messages = phase1_fragments = decision_messages = 0
    total_bits = 0
    max_bits = 0
    for line in fh:
        parts = line.split()
        if not parts:
            continue
        vtime, kind, src, dst = float(parts[0]), parts[1], int(parts[2]), int(parts[3])
        payload = dict(p.split("=", 1) for p in parts[4:])
        if kind == "enter":
            entry[dst] = vtime
        elif kind == "term":
            term[dst] = vtime
        elif kind == "info":
            phase1_messages += 1
            phase1_fragments += int(payload["frags"])
            total_bits += int(payload["bits"])
            max_bits = max(max_bits, int(payload["maxfrag"]))
        elif kind == "dec":
            decision_messages += 1
            total_bits += DECISION_BITS
            max_bits = max(max_bits, DECISION_BITS)
        elif kind == "resolve":
            trig = payload["trigger"]
            tid = None if trig == "self" else UpdateId(*(int(x) for x in trig.split(":")))
            resolutions.append(
                Resolution(dst, int(payload["i"]), bool(int(payload["accept"])), vtime, tid)
            )
        else:
            raise ValueError(f"unknown trace event kind {kind!r}")
    nodes = sorted(entry)
    if nodes != sorted(term):
        raise ValueError("trace has mismatched enter/term events")
    entry_arr = np.array([entry[v] for v in nodes])
    term_arr = np.array([term[v] for v in nodes])
    phase1_end = float(entry_arr.max()) if nodes else 0.0
    stats = RunStats(
        makespan=float(term_arr.max()) if nodes else 0.0,
        phase1_end=phase1_end,
        residence=np.maximum(term_arr - phase1_end, 0.0),
        entry_times=entry_arr,
        termination_times=term_arr,
        phase1_messages=phase1_messages,
        phase1_fragments=phase1_fragments,
        decision_messages=decision_messages,
        total_bits=total_bits,
        max_message_bits=max_bits,
    )
    return stats, resolutions

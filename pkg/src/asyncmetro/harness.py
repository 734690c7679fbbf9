"""Experiment harness: config parsing, seeded batch execution, post-processing.

Config files are INI-style with sections [model], [graph], [chain],
[scheduler], and [experiment]. Every run is a pure function of (config,
seed), so repeated invocations produce byte-identical outputs. The sweep
runner can fan independent (n, seed) cells out to a process pool sized by the
ASYNCMETRO_WORKERS environment variable (default 1).
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import IO

import numpy as np

from . import graphs, instrument, models, netsim, oracle, schedule as sched
from .models import SpinModel

WORKERS_ENV = "ASYNCMETRO_WORKERS"

# Statistical tolerances, sized to the default sample budgets: the sampling
# noise of a TV estimate at 1e4 runs stays well under 0.05, and three or more
# grid points make R^2 >= 0.8 a meaningful fit-quality bar.
TV_LIMIT = 0.05
FIT_R2_LIMIT = 0.8


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model_kind: str
    q: int
    lam: float
    beta: float
    graph_kind: str
    graph_n: int
    graph_degree: int
    graph_rows: int
    graph_cols: int
    graph_seed: int
    graph_path: str
    T: float
    y0_policy: str
    y0_values: list[int] | None
    scheduler_policies: list[str]
    scheduler_seed: int
    seeds: list[int]
    n_grid: list[int]
    runs: int
    base_dir: Path = field(default_factory=Path)


def _parse_seed_spec(spec: str) -> list[int]:
    """Either "a:b" (inclusive range) or a comma list of ints."""
    spec = spec.strip()
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ConfigError(f"empty seed range {spec!r}")
        return list(range(lo, hi + 1))
    return [int(x) for x in spec.replace(",", " ").split()]


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read(path)
    try:
        m = parser["model"]
        g = parser["graph"]
        c = parser["chain"]
    except KeyError as exc:
        raise ConfigError(f"missing config section {exc}") from None
    s = parser["scheduler"] if parser.has_section("scheduler") else {}
    e = parser["experiment"] if parser.has_section("experiment") else {}

    kind = m.get("kind", "").strip().lower()
    if kind not in ("coloring", "hardcore", "ising"):
        raise ConfigError(f"[model] kind must be coloring|hardcore|ising, got {kind!r}")

    if "t" in c and "steps_per_node" in c:
        raise ConfigError("[chain] give either T or steps_per_node, not both")
    graph_n = int(g.get("n", "0"))
    if "steps_per_node" in c:
        base = float(c["steps_per_node"])
        if graph_n < 1:
            raise ConfigError("[chain] steps_per_node needs [graph] n")
        T = oracle.horizon_for_steps(base, graph_n)
    else:
        try:
            T = float(c["T"])
        except KeyError:
            raise ConfigError("[chain] needs T (or steps_per_node)") from None
    if T < 0:
        raise ConfigError(f"[chain] T must be >= 0, got {T}")

    y0_policy = c.get("y0", "default").strip().lower()
    y0_values = None
    if y0_policy == "fixed":
        if "y0_values" not in c:
            raise ConfigError("[chain] y0 = fixed needs y0_values")
        y0_values = [int(x) for x in c["y0_values"].replace(",", " ").split()]

    policies = [p.strip() for p in s.get("policies", s.get("policy", "synchronous")).split(",")]
    for p in policies:
        if p not in netsim.SCHEDULER_POLICIES:
            raise ConfigError(f"unknown scheduler policy {p!r}")

    cfg = ExperimentConfig(
        model_kind=kind,
        q=int(m.get("q", "2")),
        lam=float(m.get("lambda", m.get("lam", "1.0"))),
        beta=float(m.get("beta", "0.0")),
        graph_kind=g.get("kind", "").strip().lower(),
        graph_n=graph_n,
        graph_degree=int(g.get("degree", "0")),
        graph_rows=int(g.get("rows", "0")),
        graph_cols=int(g.get("cols", "0")),
        graph_seed=int(g.get("seed", "0")),
        graph_path=g.get("path", "").strip(),
        T=T,
        y0_policy=y0_policy,
        y0_values=y0_values,
        scheduler_policies=policies,
        scheduler_seed=int(s.get("seed", "0")),
        seeds=_parse_seed_spec(e.get("seeds", "1:10")),
        n_grid=[int(x) for x in e.get("n_grid", "").replace(",", " ").split()] if e.get("n_grid") else [],
        runs=int(e.get("runs", "1000")),
        base_dir=path.parent,
    )
    if not cfg.seeds:
        raise ConfigError("no seeds configured")
    return cfg


def build_graph(cfg: ExperimentConfig, n_override: int | None = None) -> graphs.Graph:
    n = n_override if n_override is not None else cfg.graph_n
    kind = cfg.graph_kind
    if kind == "cycle":
        return graphs.cycle_graph(n)
    if kind == "grid":
        if n_override is not None:
            side = int(round(math.sqrt(n)))
            if side * side != n:
                raise ConfigError(f"grid sweep sizes must be perfect squares, got {n}")
            return graphs.grid_graph(side, side)
        return graphs.grid_graph(cfg.graph_rows, cfg.graph_cols)
    if kind == "random-regular":
        return graphs.random_regular_graph(n, cfg.graph_degree, cfg.graph_seed)
    if kind == "edgelist":
        path = Path(cfg.graph_path)
        if not path.is_absolute():
            path = cfg.base_dir / path
        if not path.exists():
            raise ConfigError(f"graph file not found: {path}")
        return graphs.read_edge_list(path)
    if kind == "empty":
        return graphs.empty_graph(n)
    raise ConfigError(f"unknown graph kind {cfg.graph_kind!r}")


def build_model(cfg: ExperimentConfig, graph: graphs.Graph) -> SpinModel:
    if cfg.model_kind == "coloring":
        return models.make_coloring(graph, cfg.q)
    if cfg.model_kind == "hardcore":
        return models.make_hardcore(graph, cfg.lam)
    return models.make_ising(graph, cfg.beta)


def initial_configuration(cfg: ExperimentConfig, model: SpinModel) -> np.ndarray:
    policy = cfg.y0_policy
    if policy == "default":
        policy = "greedy" if model.kind == "coloring" else "zeros"
    if policy in ("zeros", "all-zero"):
        return np.zeros(model.n, dtype=np.int64)
    if policy == "greedy":
        if model.kind != "coloring":
            raise ConfigError("y0 = greedy only applies to coloring models")
        colors = np.full(model.n, -1, dtype=np.int64)
        for v in range(model.n):
            used = {int(colors[u]) for u in model.graph.adj[v] if colors[u] >= 0}
            for c in range(model.q):
                if c not in used:
                    colors[v] = c
                    break
            else:
                raise ConfigError(
                    f"greedy proper coloring infeasible at node {v} with q={model.q}; "
                    f"use y0 = fixed or zeros"
                )
        return colors
    if policy == "fixed":
        vals = np.asarray(cfg.y0_values, dtype=np.int64)
        if len(vals) != model.n:
            raise ConfigError(f"y0_values has length {len(vals)}, graph has {model.n} nodes")
        if vals.min() < 0 or vals.max() >= model.q:
            raise ConfigError(f"y0_values out of range 0..{model.q - 1}")
        return vals
    raise ConfigError(f"unknown y0 policy {cfg.y0_policy!r}")


def _scheduler_for(policy: str, cfg: ExperimentConfig, run_seed: int) -> netsim.Scheduler:
    # uniform delays get a stream keyed by (scheduler seed, run seed)
    derived = int(np.random.SeedSequence(entropy=(cfg.scheduler_seed, run_seed)).generate_state(1)[0])
    return netsim.make_scheduler(policy, seed=derived)


def run_one(
    cfg: ExperimentConfig,
    seed: int,
    policy: str,
    n_override: int | None = None,
    collect_trace: bool = False,
) -> tuple[netsim.SimulationResult, instrument.ResidenceReport, SpinModel]:
    graph = build_graph(cfg, n_override)
    model = build_model(cfg, graph)
    y0 = initial_configuration(cfg, model)
    sch = sched.generate(model, cfg.T, seed)
    scheduler = _scheduler_for(policy, cfg, seed)
    result = netsim.run(model, sch, y0, scheduler, collect_trace=collect_trace)
    report = instrument.phase2_residence(result, verify=True)
    return result, report, model


def cmd_run(cfg: ExperimentConfig, out: IO[str], finals_out: IO[str] | None = None) -> int:
    rows = []
    finals = []
    for seed in cfg.seeds:
        for policy in cfg.scheduler_policies:
            result, report, model = run_one(cfg, seed, policy)
            rows.append(instrument.run_csv_row(seed, policy, model, cfg.T, result, report))
            finals.append((seed, policy, result.final.tolist()))
    rows.sort(key=lambda r: (r["seed"], r["scheduler"]))
    instrument.write_csv(rows, out)
    if finals_out is not None:
        for seed, policy, config in sorted(finals):
            finals_out.write(f"{seed} {policy} {' '.join(map(str, config))}\n")
    return 0


def compare_with_oracle(
    model: SpinModel, sch: sched.UpdateSchedule, y0, result: netsim.SimulationResult
) -> tuple[int, int, int] | None:
    """First mismatching coordinate against the sequential chain, or None."""
    expected = oracle.run_continuous(model, sch, y0).final
    got = result.final
    for v in range(model.n):
        if expected[v] != got[v]:
            return v, int(expected[v]), int(got[v])
    return None


def cmd_verify_coupling(cfg: ExperimentConfig, out: IO[str]) -> int:
    checked = 0
    for seed in cfg.seeds:
        graph = build_graph(cfg)
        model = build_model(cfg, graph)
        y0 = initial_configuration(cfg, model)
        sch = sched.generate(model, cfg.T, seed)
        expected = oracle.run_continuous(model, sch, y0).final
        for policy in cfg.scheduler_policies:
            scheduler = _scheduler_for(policy, cfg, seed)
            result = netsim.run(model, sch, y0, scheduler)
            for v in range(model.n):
                if result.final[v] != expected[v]:
                    out.write(
                        f"MISMATCH seed={seed} scheduler={policy} node={v} "
                        f"expected={int(expected[v])} got={int(result.final[v])}\n"
                    )
                    return 1
            checked += 1
    out.write(f"coupling verified: {checked} runs, {len(cfg.seeds)} seeds x "
              f"{len(cfg.scheduler_policies)} schedulers, all exact\n")
    return 0


def _tv_cell(args) -> tuple[int, ...]:
    cfg, seed = args
    result, _, _ = run_one(cfg, seed, cfg.scheduler_policies[0])
    return tuple(int(x) for x in result.final)


def empirical_tv(cfg: ExperimentConfig, runs: int | None = None, workers: int | None = None) -> tuple[float, int]:
    """TV distance between simulated final configurations over fresh seeds and
    the exhaustive distribution."""
    graph = build_graph(cfg)
    model = build_model(cfg, graph)
    if model.q ** model.n > 10**6:
        raise ConfigError(f"state space too large for exact comparison: {model.q}^{model.n}")
    exact = oracle.exact_distribution(model)
    runs = runs if runs is not None else cfg.runs
    seeds = [cfg.seeds[0] + k for k in range(runs)]
    workers = workers if workers is not None else worker_count()
    counts: dict[tuple[int, ...], int] = {}
    if workers > 1:
        with Pool(workers) as pool:
            for key in pool.imap_unordered(_tv_cell, [(cfg, s) for s in seeds], chunksize=64):
                counts[key] = counts.get(key, 0) + 1
    else:
        for s in seeds:
            key = _tv_cell((cfg, s))
            counts[key] = counts.get(key, 0) + 1
    empirical = {k: c / runs for k, c in counts.items()}
    return oracle.total_variation(empirical, exact), runs


def cmd_tv_test(cfg: ExperimentConfig, out: IO[str]) -> int:
    tv, runs = empirical_tv(cfg)
    out.write(f"tv_distance={tv!r} runs={runs} T={cfg.T!r}\n")
    if cfg.T == 0:
        out.write("T=0: reported distance is between the initial point mass and the target\n")
    return 0


def fit_log_n(ns, ys) -> tuple[float, float, float, list[float]]:
    """Least-squares fit y = a + b*ln n; returns (a, b, R^2, residuals)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.asarray(ys, dtype=float)
    b, a = np.polyfit(x, y, 1)
    pred = a + b * x
    resid = (y - pred).tolist()
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(a), float(b), r2, resid


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _sweep_cell(args) -> tuple[int, int, float, float, float, int, int, int]:
    cfg, n, seed = args
    result, report, model = run_one(cfg, seed, cfg.scheduler_policies[0], n_override=n)
    return (
        n,
        seed,
        result.stats.makespan,
        result.stats.phase1_end,
        report.max_residence,
        report.max_chain_length,
        result.stats.message_count,
        result.stats.total_bits,
    )


@dataclass
class SweepSummary:
    per_n: dict[int, dict]          # n -> aggregate row
    fit_intercept: float
    fit_slope: float
    fit_r2: float
    residuals: list[float]
    growth_ratios: list[float]      # consecutive per-n mean max-residence ratios


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> tuple[list[tuple], SweepSummary]:
    if not cfg.n_grid:
        raise ConfigError("[experiment] n_grid is required for sweep")
    cells = [(cfg, n, seed) for n in cfg.n_grid for seed in cfg.seeds]
    workers = workers if workers is not None else worker_count()
    if workers > 1:
        with Pool(workers) as pool:
            raw = list(pool.imap_unordered(_sweep_cell, cells, chunksize=1))
    else:
        raw = [_sweep_cell(cell) for cell in cells]
    raw.sort()
    per_n: dict[int, dict] = {}
    for n in cfg.n_grid:
        rows = [r for r in raw if r[0] == n]
        res = np.array([r[4] for r in rows])
        chains = np.array([r[5] for r in rows])
        makespans = np.array([r[2] for r in rows])
        per_n[n] = {
            "n": n,
            "median_makespan": float(np.median(makespans)),
            "max_makespan": float(makespans.max()),
            "mean_max_residence": float(res.mean()),
            "median_max_residence": float(np.median(res)),
            "max_max_residence": float(res.max()),
            "median_max_chain": float(np.median(chains)),
            "max_max_chain": int(chains.max()),
        }
    ns = sorted(per_n)
    # fit per-n means: under all-unit delays the per-run maxima are integers,
    # so medians quantize too coarsely for a meaningful R^2
    means = [per_n[n]["mean_max_residence"] for n in ns]
    a, b, r2, resid = fit_log_n(ns, means)
    ratios = [
        means[k + 1] / means[k] if means[k] > 0 else math.inf
        for k in range(len(ns) - 1)
    ]
    return raw, SweepSummary(per_n, a, b, r2, resid, ratios)


SWEEP_FIELDS = ("n", "seed", "makespan", "phase1_end", "max_residence", "max_chain_length", "messages", "bits")


def cmd_sweep(cfg: ExperimentConfig, out: IO[str]) -> int:
    raw, summary = run_sweep(cfg)
    out.write(",".join(SWEEP_FIELDS) + "\n")
    for row in raw:
        out.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in row) + "\n")
    out.write(f"# fit max_residence ~ {summary.fit_intercept!r} + {summary.fit_slope!r}*ln(n), "
              f"R2={summary.fit_r2!r}\n")
    out.write(f"# residuals: {' '.join(repr(r) for r in summary.residuals)}\n")
    out.write(f"# growth ratios per grid step: {' '.join(repr(r) for r in summary.growth_ratios)}\n")
    return 0


def cmd_dump_schedule(cfg: ExperimentConfig, out: IO[str]) -> int:
    graph = build_graph(cfg)
    model = build_model(cfg, graph)
    sch = sched.generate(model, cfg.T, cfg.seeds[0])
    sched.dump(sch, out)
    return 0

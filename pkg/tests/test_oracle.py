"""Sequential reference chains: trivial cases, stationarity, tail bounds."""

import io
import itertools
import math

import numpy as np
import pytest

from asyncmetro import (
    cycle_graph,
    discrete_continuous_bridge,
    empty_graph,
    exact_distribution,
    generate,
    horizon_for_steps,
    make_coloring,
    make_hardcore,
    make_ising,
    path_graph,
    run_continuous,
    run_discrete,
    total_variation,
)
from asyncmetro import oracle as oracle_mod
from tests.test_schedule import make_manual


def proper_colorings(graph, q):
    """Brute-force enumeration, independent of the library's weight logic."""
    edges = list(graph.edges())
    return [
        cfg
        for cfg in itertools.product(range(q), repeat=graph.n)
        if all(cfg[u] != cfg[v] for u, v in edges)
    ]


class TestRunContinuous:
    def test_no_updates_returns_initial(self):
        m = make_coloring(cycle_graph(4), 3)
        s = generate(m, 0.0, 1)
        out = run_continuous(m, s, [0, 1, 0, 1])
        assert out.final.tolist() == [0, 1, 0, 1]
        assert out.trajectory == []

    def test_isolated_vertex_always_accepts(self):
        m = make_coloring(empty_graph(1), 4)
        s = generate(m, 20.0, 3)
        out = run_continuous(m, s, [0])
        assert out.final[0] == s.proposals[0][-1]
        # every update took its proposal
        for step, prop in zip(out.trajectory, s.proposals[0].tolist()):
            assert step.new_state == prop

    def test_single_edge_forced_rejection(self):
        # q=2 coloring on one edge, proposal collides with the neighbor
        m = make_coloring(path_graph(2), 2)
        s = make_manual(1.0, [[0.5], []], proposals=[[1], []], coins=[[0.9], []], q=2)
        out = run_continuous(m, s, [0, 1])
        assert out.final.tolist() == [0, 1]
        assert out.trajectory[0].new_state == 0

    def test_determinism(self):
        m = make_ising(cycle_graph(6), 0.3)
        s = generate(m, 8.0, 21)
        a = run_continuous(m, s, [0] * 6)
        b = run_continuous(m, s, [0] * 6)
        assert np.array_equal(a.final, b.final)
        assert a.trajectory == b.trajectory

    def test_single_site_moves_only(self):
        m = make_coloring(cycle_graph(5), 4)
        s = generate(m, 10.0, 9)
        out = run_continuous(m, s, [0, 1, 2, 3, 0])
        cur = [0, 1, 2, 3, 0]
        for step in out.trajectory:
            nxt = list(cur)
            nxt[step.node] = step.new_state
            assert sum(a != b for a, b in zip(cur, nxt)) <= 1
            cur = nxt

    def test_coloring_stays_proper(self):
        g = cycle_graph(6)
        m = make_coloring(g, 4)
        s = generate(m, 15.0, 14)
        y0 = [0, 1, 0, 1, 0, 1]
        out = run_continuous(m, s, y0)
        cur = list(y0)
        for step in out.trajectory:
            cur[step.node] = step.new_state
            assert all(cur[u] != cur[v] for u, v in g.edges())

    def test_shape_mismatch_rejected(self):
        m = make_coloring(cycle_graph(4), 3)
        s = generate(m, 1.0, 1)
        with pytest.raises(ValueError):
            run_continuous(m, s, [0, 1])

    def test_configuration_at_right_open_convention(self):
        m = make_coloring(path_graph(2), 3)
        s = make_manual(1.0, [[0.4], []], proposals=[[2], []], coins=[[0.0], []], q=3)
        out = run_continuous(m, s, [0, 1])
        assert oracle_mod.configuration_at(s, [0, 1], out.trajectory, 0.3).tolist() == [0, 1]
        # at the update time itself the new value already holds
        assert oracle_mod.configuration_at(s, [0, 1], out.trajectory, 0.4).tolist() == [2, 1]
        assert oracle_mod.configuration_at(s, [0, 1], out.trajectory, 1.0).tolist() == [2, 1]
        with pytest.raises(ValueError):
            oracle_mod.configuration_at(s, [0, 1], out.trajectory, 1.5)

    def test_trajectory_export(self):
        m = make_coloring(cycle_graph(4), 5)
        s = generate(m, 2.0, 8)
        out = run_continuous(m, s, [0, 1, 2, 3])
        buf = io.StringIO()
        oracle_mod.write_trajectory(out.trajectory, buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == s.total_updates
        if lines:
            node, index, time, state = lines[0].split()
            assert int(index) == 1


class TestRunDiscrete:
    def test_zero_steps(self):
        m = make_coloring(cycle_graph(4), 3)
        out = run_discrete(m, 0, 1, [0, 1, 0, 1])
        assert out.tolist() == [0, 1, 0, 1]

    def test_single_node_uniform_marginal(self):
        m = make_coloring(empty_graph(1), 2)
        visits = [0, 0]

        def observer(step, cfg):
            visits[cfg[0]] += 1

        run_discrete(m, 100_000, 5, [0], observer=observer)
        frac = visits[0] / sum(visits)
        assert abs(frac - 0.5) < 0.01

    def test_c4_visits_proper_colorings_uniformly(self):
        g = cycle_graph(4)
        q = 3
        m = make_coloring(g, q)
        targets = proper_colorings(g, q)
        assert len(targets) == 18
        counts = {cfg: 0 for cfg in targets}

        def observer(step, cfg):
            counts[tuple(cfg)] += 1

        steps = 1_000_000
        run_discrete(m, steps, 17, targets[0], observer=observer)
        expected = steps / 18
        for cfg, c in counts.items():
            assert abs(c - expected) / expected < 0.20, cfg

    def test_determinism(self):
        m = make_hardcore(cycle_graph(5), 0.8)
        a = run_discrete(m, 5000, 3, [0] * 5)
        b = run_discrete(m, 5000, 3, [0] * 5)
        assert np.array_equal(a, b)


class TestExactDistribution:
    def test_c4_coloring_uniform_over_proper(self):
        g = cycle_graph(4)
        table = exact_distribution(make_coloring(g, 3))
        assert len(table) == 18
        assert all(p == pytest.approx(1 / 18) for p in table.values())
        assert set(table) == set(proper_colorings(g, 3))

    def test_single_edge_hardcore(self):
        table = exact_distribution(make_hardcore(path_graph(2), 1.0))
        assert table == {
            (0, 0): pytest.approx(1 / 3),
            (0, 1): pytest.approx(1 / 3),
            (1, 0): pytest.approx(1 / 3),
        }

    def test_single_node_ising(self):
        table = exact_distribution(make_ising(empty_graph(1), 0.7))
        assert table[(0,)] == pytest.approx(0.5)
        assert table[(1,)] == pytest.approx(0.5)

    def test_ising_edge_weights(self):
        beta = 0.3
        table = exact_distribution(make_ising(path_graph(2), beta))
        z = 2 * math.exp(beta) + 2 * math.exp(-beta)
        assert table[(0, 0)] == pytest.approx(math.exp(beta) / z)
        assert table[(0, 1)] == pytest.approx(math.exp(-beta) / z)

    def test_state_space_guard(self):
        m = make_coloring(empty_graph(30), 4)  # 4^30 states
        with pytest.raises(ValueError):
            exact_distribution(m)

    def test_custom_weight(self):
        m = make_coloring(path_graph(2), 2)
        table = exact_distribution(m, weight=lambda cfg: 1.0)
        assert all(p == pytest.approx(1 / 4) for p in table.values())

    def test_total_variation(self):
        p = {(0,): 0.5, (1,): 0.5}
        q = {(0,): 1.0}
        assert total_variation(p, q) == pytest.approx(0.5)
        assert total_variation(p, p) == 0.0


class TestBridge:
    def test_mean(self):
        assert discrete_continuous_bridge(1.0, 100).mean == 100.0

    def test_lower_tail_value(self):
        b = discrete_continuous_bridge(1.0, 100)
        assert b.lower_tail(0.5) == pytest.approx(math.exp(-12.5))

    def test_upper_tail_value(self):
        b = discrete_continuous_bridge(1.0, 100)
        assert b.upper_tail(0.5) == pytest.approx(math.exp(-25 / 3))

    def test_far_tail(self):
        b = discrete_continuous_bridge(1.0, 100)
        assert b.far_tail(500) == pytest.approx(2.0**-500)
        with pytest.raises(ValueError):
            b.far_tail(499)

    def test_horizon_for_steps(self):
        assert horizon_for_steps(10.0, 100) == pytest.approx(20 + 8 * math.log(100))

    def test_guards(self):
        with pytest.raises(ValueError):
            discrete_continuous_bridge(0.0, 10)
        with pytest.raises(ValueError):
            discrete_continuous_bridge(1.0, 0)

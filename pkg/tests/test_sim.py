import dataclasses
import math

import numpy as np
import pytest

from cavf import sim as sim_module
from cavf.errors import NumericFailure
from cavf.geometry import make_obstacle
from cavf.scenario import builtin_scenario
from cavf.sim import (
    AgentState,
    Outcome,
    SimConfig,
    compute_metrics,
    min_obstacle_distance,
    path_length,
    run,
    sample_field_grid,
    step,
)
from builders import scenario


class TestAgentState:
    def test_rejects_non_finite(self):
        with pytest.raises(NumericFailure):
            AgentState([0, math.inf], [0, 0])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            AgentState([0, 0], [0, 0, 0])


class TestSimConfig:
    @pytest.mark.parametrize("kwargs", [dict(dt=0), dict(t_max=-1), dict(arrival_pos_tol=0), dict(record_stride=0), dict(dt=math.nan)])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SimConfig(**kwargs)


class TestStep:
    def test_ballistic(self):
        s = step(AgentState([1, 2], [0.5, -1]), [0, 0], 0.1)
        np.testing.assert_allclose(s.position, [1.05, 1.9])
        np.testing.assert_array_equal(s.velocity, [0.5, -1])

    def test_from_rest(self):
        s = step(AgentState([0, 0], [0, 0]), [1, 0], 1.0)
        np.testing.assert_array_equal(s.position, [0.5, 0])
        np.testing.assert_array_equal(s.velocity, [1, 0])

    def test_half_steps_compose(self):
        s0 = AgentState([0.3, -0.2, 1.0], [1.0, 2.0, -0.5])
        u = np.array([0.7, -1.3, 0.2])
        full = step(s0, u, 0.2)
        half = step(step(s0, u, 0.1), u, 0.1)
        np.testing.assert_allclose(half.position, full.position, rtol=0, atol=1e-15)
        np.testing.assert_allclose(half.velocity, full.velocity, rtol=0, atol=1e-15)

    def test_overflow_is_numeric_failure(self):
        with pytest.raises(NumericFailure):
            step(AgentState([0, 0], [1e308, 0]), [1e308, 0], 10.0)

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            step(AgentState([0, 0], [0, 0]), [0, 0], 0.0)


class TestMinObstacleDistance:
    def test_empty(self):
        assert min_obstacle_distance([0, 0], [], 0.0) == (math.inf, None)

    def test_single_circle(self):
        assert min_obstacle_distance([0, 0], [make_obstacle([3, 0], [1, 1], id="c")], 0.0) == (2.0, "c")

    def test_on_boundary(self):
        d, _ = min_obstacle_distance([2, 0], [make_obstacle([3, 0], [1, 1])], 0.0)
        assert d == 0.0

    def test_nearer_wins(self):
        obs = [make_obstacle([3, 0], [1, 1], id="far"), make_obstacle([0, -2], [1, 1], id="near")]
        assert min_obstacle_distance([0, 0], obs, 0.0) == (1.0, "near")

    def test_inside_negative(self):
        d, _ = min_obstacle_distance([3.2, 0], [make_obstacle([3, 0], [1, 1])], 0.0)
        assert d == pytest.approx(-0.8)


class TestRun:
    def test_obstacle_free(self):
        sc = builtin_scenario("free")
        result = run(sc)
        assert result.outcome is Outcome.ARRIVED
        assert result.metrics.final_error <= sc.sim.arrival_pos_tol
        assert result.metrics.min_clearance == math.inf
        err = np.array([np.linalg.norm(s.position - np.asarray(sc.target)) for s in result.samples])
        start = int(0.05 * len(err))
        assert np.all(np.diff(err[start:]) < 0)

    def test_fig4_arrives(self):
        result = run(builtin_scenario("fig4"))
        assert result.outcome is Outcome.ARRIVED
        assert result.metrics.min_clearance > 0

    def test_deterministic(self):
        sc = builtin_scenario("fig1")
        a, b = run(sc), run(sc)
        assert a.outcome == b.outcome and len(a.samples) == len(b.samples)
        for x, y in zip(a.samples, b.samples):
            assert x.t == y.t
            assert np.array_equal(x.position, y.position) and np.array_equal(x.control, y.control)

    def test_samples_strictly_increasing(self):
        result = run(builtin_scenario("fig1"))
        ts = [s.t for s in result.samples]
        assert all(b > a for a, b in zip(ts, ts[1:]))

    def test_metrics_recomputable(self):
        sc = builtin_scenario("fig4")
        result = run(sc)
        again = compute_metrics(result.samples, result.final_state, result.final_time, sc.target, sc.all_obstacles(), result.final_time)
        assert again == result.metrics
        assert result.metrics.path_length == path_length([s.position for s in result.samples])

    @pytest.mark.parametrize("name", ["free", "fig1", "fig4", "fig5"])
    def test_path_at_least_straight_line(self, name):
        sc = builtin_scenario(name)
        result = run(sc)
        assert result.outcome is Outcome.ARRIVED
        straight = np.linalg.norm(np.asarray(sc.agent_position) - np.asarray(sc.target))
        # The last recorded sample is within arrival tolerance of the target.
        assert result.metrics.path_length >= straight - sc.sim.arrival_pos_tol

    @pytest.mark.parametrize("name", ["free", "fig1"])
    def test_dt_halving(self, name):
        sc = builtin_scenario(name)
        base = run(sc)
        finer = run(dataclasses.replace(sc, sim=dataclasses.replace(sc.sim, dt=sc.sim.dt / 2)))
        assert finer.outcome is Outcome.ARRIVED
        shift = np.linalg.norm(base.final_state.position - finer.final_state.position)
        assert shift <= 2 * sc.sim.arrival_pos_tol + sc.sim.dt

    def test_timeout(self):
        result = run(scenario(sim={"t_max": 0.001}))
        assert result.outcome is Outcome.TIMEOUT
        assert len(result.samples) == 2

    def test_immediate_arrival_no_samples(self):
        result = run(scenario(start=(1.0, 0.0), target=(1.0, 0.0)))
        assert result.outcome is Outcome.ARRIVED
        assert result.samples == ()
        assert result.metrics.path_length == 0.0

    def test_collision_when_braking_impossible(self):
        circle = {"id": "c", "center": [2.0, 0.0], "semi_axes": [0.5, 0.5]}
        sc = scenario([circle], start=(0.0, 0.0), target=(4.0, 0.0), velocity=(20.0, 0.0), control={"u_max": 0.1})
        result = run(sc)
        assert result.outcome is Outcome.COLLISION
        assert result.samples[-1].min_clearance < 0
        assert result.samples[-1].active_obstacle_id == "c"

    def test_numeric_failure_keeps_partial_samples(self, monkeypatch):
        calls = {"n": 0}
        real = sim_module.blended_field

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] > 10:
                raise NumericFailure("injected")
            return real(*args, **kwargs)

        monkeypatch.setattr(sim_module, "blended_field", flaky)
        result = run(builtin_scenario("free"))
        assert result.outcome is Outcome.NUMERIC_FAILURE
        assert len(result.samples) == 10
        assert "injected" in result.message

    def test_record_stride(self):
        dense = run(builtin_scenario("free"))
        sparse = run(scenario(sim={"dt": 0.01, "t_max": 10.0, "record_stride": 10}))
        assert sparse.outcome is Outcome.ARRIVED
        assert [s.t for s in sparse.samples[:-1]] == [s.t for s in dense.samples[:-1:10]]

    def test_constrained_input_bound(self):
        result = run(builtin_scenario("fig6"))
        assert result.outcome is Outcome.ARRIVED
        assert result.metrics.max_control_norm <= 1.0


class TestFieldGrid:
    def test_obstacle_free_points_at_target(self):
        sc = scenario(target=(0.73, 0.21))
        grid = sample_field_grid(sc, 0.0, 15)
        assert grid.points.shape == (225, 2)
        to_target = np.asarray(sc.target) - grid.points
        cross = to_target[:, 0] * grid.values[:, 1] - to_target[:, 1] * grid.values[:, 0]
        assert np.all(np.abs(cross) <= 1e-12 * np.linalg.norm(to_target, axis=1) * np.linalg.norm(grid.values, axis=1) + 1e-300)
        assert np.all(np.sum(to_target * grid.values, axis=1) > 0)

    def test_inside_points_flagged(self):
        sc = builtin_scenario("fig5")
        grid = sample_field_grid(sc, 0.0, 21)
        i = np.flatnonzero(np.all(np.isclose(grid.points, [0.5, 0.5]), axis=1))[0]
        assert grid.inside[i]
        np.testing.assert_array_equal(grid.values[i], [0, 0])
        assert not grid.failed.any()

    def test_3d_needs_plane(self):
        sc = builtin_scenario("fig3")
        with pytest.raises(ValueError):
            sample_field_grid(sc, 0.0, 4)
        grid = sample_field_grid(sc, 0.0, 4, (0.0, 0.0, 1.0, 0.25))
        assert grid.points.shape == (16, 3)
        np.testing.assert_allclose(grid.points[:, 2], 0.25)

    def test_failures_recorded(self, monkeypatch):
        from cavf.errors import ConvergenceFailure

        def boom(*args, **kwargs):
            raise ConvergenceFailure("injected")

        monkeypatch.setattr(sim_module, "blended_field", boom)
        grid = sample_field_grid(builtin_scenario("fig1"), 0.0, 3)
        assert grid.failed.all()

    @pytest.mark.parametrize("resolution", [63, 100, 200])
    def test_fig1_single_zero_at_target(self, resolution):
        # Count grid cells around which the field direction winds; cells that
        # touch an obstacle are skipped since the rear boundary point is singular.
        # Resolutions are chosen so P_f is not on a grid line, where the
        # winding of the cells sharing that edge is ill-defined.
        sc = builtin_scenario("fig1")
        grid = sample_field_grid(sc, 0.0, resolution)
        n = resolution
        ang = np.arctan2(grid.values[:, 1], grid.values[:, 0]).reshape(n, n)
        bad = (grid.inside | grid.failed).reshape(n, n)
        pts = grid.points.reshape(n, n, 2)

        def wrap(a):
            return (a + math.pi) % (2 * math.pi) - math.pi

        corners = [ang[:-1, :-1], ang[1:, :-1], ang[1:, 1:], ang[:-1, 1:]]
        winding = sum(wrap(corners[(k + 1) % 4] - corners[k]) for k in range(4)) / (2 * math.pi)
        skip = bad[:-1, :-1] | bad[1:, :-1] | bad[1:, 1:] | bad[:-1, 1:]
        cells = np.argwhere((np.abs(winding) > 0.5) & ~skip)
        assert len(cells) == 1
        i, j = cells[0]
        centre = pts[i : i + 2, j : j + 2].reshape(-1, 2).mean(axis=0)
        spacing = pts[1, 0, 0] - pts[0, 0, 0]
        assert np.linalg.norm(centre - np.asarray(sc.target)) <= spacing

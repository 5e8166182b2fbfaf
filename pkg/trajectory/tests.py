import math
import tempfile

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from lateralbench.exceptions import ConfigurationError, PathConstructionError
from trajectory.services.benchmark import SUITE, benchmark_suite, benchmark_trajectory, curve
from trajectory.services.io import (
    load_trajectory,
    read_suite,
    read_trajectory_csv,
    write_suite,
    write_trajectory_csv,
)
from trajectory.services.paths import Arc, Clothoid, Straight, build_path, mirror_segments
from trajectory.services.speed_profile import (
    DrivingLimits,
    Trajectory,
    plan_speed_profile,
    straight_sections,
)

LOOSE = DrivingLimits(v_max=500, a_x_max=100, a_x_min=100, a_y_max=4)


class BuildPathTests(SimpleTestCase):
    def test_straight(self):
        path = build_path([Straight(100.0)], ds=1.0)
        self.assertEqual(len(path), 101)
        self.assertTrue(np.all(path.curvature == 0))
        self.assertAlmostEqual(path.x[-1], 100.0, places=9)

    def test_half_circle(self):
        path = build_path([Arc(50.0, math.pi)], ds=0.5)
        self.assertAlmostEqual(math.hypot(path.x[-1], path.y[-1]), 100.0, delta=1e-6)

    def test_clothoid_heading_change(self):
        path = build_path([Clothoid(0.0, 0.02, 50.0)], ds=0.5)
        np.testing.assert_allclose(path.curvature, 0.02 * path.s / 50.0, atol=1e-12)
        self.assertAlmostEqual(path.heading[-1] - path.heading[0], 0.5, delta=1e-4)

    def test_heading_matches_tangent(self):
        path = build_path(curve(30.0, math.pi / 2, 10.0) + [Straight(20.0)], ds=0.5)
        tangent = np.arctan2(np.diff(path.y), np.diff(path.x))
        midpoint_heading = 0.5 * (path.heading[1:] + path.heading[:-1])
        self.assertLess(np.max(np.abs(tangent - midpoint_heading)), 1e-3)

    def test_half_step_curvature_agrees(self):
        segments = [Straight(20.0), *curve(40.0, -math.pi / 3, 12.0), Straight(15.0)]
        coarse = build_path(segments, ds=0.5)
        fine = build_path(segments, ds=0.25)
        np.testing.assert_allclose(fine.curvature_at(coarse.s), coarse.curvature, atol=1e-3)

    def test_discontinuous_heading_rejected(self):
        with self.assertRaises(PathConstructionError):
            build_path([Straight(10.0), Arc(20.0, 1.0), Straight(5.0, heading=0.0)])

    def test_declared_continuous_heading_accepted(self):
        path = build_path([Straight(10.0), Arc(20.0, 1.0), Straight(5.0, heading=1.0)])
        self.assertAlmostEqual(path.heading[-1], 1.0)

    def test_invalid_segments(self):
        for segments in ([], [Arc(0.0, 1.0)], [Straight(-1.0)], [Straight(math.inf)]):
            with self.assertRaises(ConfigurationError):
                build_path(segments)
        with self.assertRaises(ConfigurationError):
            build_path([Straight(1.0)], ds=0.0)

    def test_mirror(self):
        segments = [Straight(10.0), *curve(25.0, math.pi / 2, 8.0)]
        path = build_path(segments)
        mirrored = build_path(mirror_segments(segments))
        np.testing.assert_allclose(mirrored.y, -path.y, atol=1e-12)
        np.testing.assert_allclose(mirrored.curvature, -path.curvature, atol=1e-12)


class SpeedProfileTests(SimpleTestCase):
    def test_straight_saturates_at_speed_limit(self):
        path = build_path([Straight(400.0)])
        speed = plan_speed_profile(path, DrivingLimits(35, 0.4, 0.7, 1.0))
        self.assertAlmostEqual(speed.max(), 35 / 3.6, places=9)
        self.assertEqual(speed[0], 0.0)
        self.assertEqual(speed[-1], 0.0)

    def test_constant_arc_cruise(self):
        path = build_path([Arc(100.0, 2 * math.pi)])
        speed = plan_speed_profile(path, LOOSE, v_start=20.0, v_end=20.0)
        np.testing.assert_allclose(speed, 20.0, rtol=1e-12)

    def test_forward_pass_from_rest(self):
        path = build_path([Straight(50.0)])
        speed = plan_speed_profile(path, DrivingLimits(500, 1.0, 100.0, 4.0))
        np.testing.assert_allclose(speed[:-1], np.sqrt(2 * path.s[:-1]), rtol=1e-9)

    def test_limits_respected(self):
        for trajectory in benchmark_suite():
            limits = trajectory.limits
            self.assertTrue(np.all(trajectory.lateral_accelerations() <= limits.a_y_max * (1 + 1e-9)))
            a_x = trajectory.longitudinal_accelerations()
            self.assertTrue(np.all(a_x <= limits.a_x_max * 1.02))
            self.assertTrue(np.all(a_x >= -limits.a_x_min * 1.02))

    @given(st.sampled_from(["v_max", "a_x_max", "a_x_min", "a_y_max"]), st.floats(1.01, 3.0))
    @settings(max_examples=30, deadline=None)
    def test_raising_a_limit_never_slows_down(self, name, factor):
        path = build_path([Straight(60.0), *curve(30.0, math.pi / 2, 10.0), Straight(40.0)])
        base = DrivingLimits(50, 1.0, 2.0, 2.0)
        raised = DrivingLimits(**{**base.__dict__, name: getattr(base, name) * factor})
        self.assertTrue(np.all(plan_speed_profile(path, raised) >= plan_speed_profile(path, base) - 1e-12))

    def test_invalid_limits(self):
        with self.assertRaises(ConfigurationError):
            DrivingLimits(0, 1, 1, 1)


class StraightSectionTests(SimpleTestCase):
    def constant_speed(self, segments, speed=10.0):
        path = build_path(segments)
        return Trajectory("test", path, np.full(len(path), speed), LOOSE)

    def test_all_straight(self):
        self.assertEqual(straight_sections(self.constant_speed([Straight(100.0)])), [(0.0, 100.0)])

    def test_short_straight(self):
        self.assertEqual(straight_sections(self.constant_speed([Straight(40.0)])), [])

    def test_straight_arc_straight(self):
        sections = straight_sections(self.constant_speed([Straight(100.0), Arc(50.0, 2.0), Straight(100.0)]))
        self.assertEqual(len(sections), 2)
        (a0, a1), (b0, b1) = sections
        self.assertEqual(a0, 0.0)
        self.assertAlmostEqual(a1, 100.0, delta=0.5)
        self.assertAlmostEqual(b0, 200.0, delta=0.5)
        self.assertAlmostEqual(b1, 300.0)


class BenchmarkSuiteTests(SimpleTestCase):
    def test_lengths_and_speeds(self):
        expected = {
            "T1": (471.0, 35), "T2": (1391.8, 71), "T3": (354.3, 66),
            "T4": (500.0, 120), "T5": (2119.6, 100), "T6": (1959.3, 70),
        }
        suite = benchmark_suite()
        self.assertEqual([t.name for t in suite], list(SUITE))
        for trajectory in suite:
            length, v_max = expected[trajectory.name]
            self.assertAlmostEqual(trajectory.length, length, delta=0.02 * length)
            self.assertAlmostEqual(trajectory.max_speed * 3.6, v_max, delta=0.05 * v_max)
            self.assertTrue(trajectory.purpose)

    def test_lateral_limit_binds(self):
        for trajectory in benchmark_suite():
            self.assertGreater(trajectory.lateral_accelerations().max(), 0.99 * trajectory.limits.a_y_max)

    def test_t4_limits(self):
        t4 = benchmark_trajectory("T4")
        self.assertEqual(t4.limits.a_y_max, 4.0)
        self.assertEqual(t4.usage, "T")

    def test_unknown_name(self):
        with self.assertRaises(ConfigurationError):
            benchmark_trajectory("T9")

    def test_curve_too_tight(self):
        with self.assertRaises(ConfigurationError):
            curve(10.0, 0.5, 10.0)


class TrajectoryFileTests(SimpleTestCase):
    def test_csv_reload(self):
        trajectory = benchmark_trajectory("T3")
        with tempfile.TemporaryDirectory() as tmp:
            target = write_trajectory_csv(trajectory, f"{tmp}/T3.csv")
            with open(target) as handle:
                self.assertEqual(handle.readline().strip(), "s,x,y,heading,curvature,speed")
            loaded = read_trajectory_csv(target, trajectory.limits)
        self.assertEqual(loaded.name, "T3")
        np.testing.assert_allclose(loaded.speed, trajectory.speed, rtol=1e-8)

    def test_suite_manifest(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_suite(benchmark_suite(), tmp)
            loaded = read_suite(tmp)
        self.assertEqual([t.name for t in loaded], list(SUITE))
        self.assertEqual(loaded[0].limits, SUITE["T1"][0])

    def test_load_by_name_or_listed_file(self):
        self.assertEqual(load_trajectory("T2").name, "T2")
        with tempfile.TemporaryDirectory() as tmp:
            write_suite([benchmark_trajectory("T3")], tmp)
            loaded = load_trajectory(f"{tmp}/T3.csv")
            self.assertEqual(loaded.limits, SUITE["T3"][0])
            with self.assertRaises(ConfigurationError):
                load_trajectory(f"{tmp}/T9.csv")
        with self.assertRaises(ConfigurationError):
            load_trajectory("T9")

    def test_missing_columns(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = f"{tmp}/bad.csv"
            with open(target, "w") as handle:
                handle.write("s,x\n0,0\n")
            with self.assertRaises(ConfigurationError):
                read_trajectory_csv(target, LOOSE)

import json
import math
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, tag
from hypothesis import given, settings, strategies as st

from controllers.services.runner import COLUMNS, COMPLETED, DIVERGED, SimLog, run_closed_loop
from controllers.services.setups import bundled_setup
from lateralbench.exceptions import ConfigurationError
from lateralbench.options import SimulationOptions
from metrics.services.report import MetricsReport, evaluate_log
from metrics.services.spectral import EPSILON, ZETA, m_epsilon, m_zeta, section_scores, straight_segments
from metrics.services.tracking import iae, iae_raw, mle
from trajectory.services.benchmark import curve
from trajectory.services.paths import Straight, build_path
from trajectory.services.speed_profile import DrivingLimits, Trajectory

F_S = 20.0


def _tone(frequency, amplitude=1.0, duration=10.0):
    t = np.arange(int(duration * F_S)) / F_S
    return amplitude * np.sin(2 * np.pi * frequency * t)


def _whole(signal):
    return [(0, len(signal))]


class TrackingMetricTests(SimpleTestCase):
    def test_zero_error(self):
        self.assertEqual(iae(np.zeros(40), 0.05), 0.0)
        self.assertEqual(mle(np.zeros(40)), 0.0)

    def test_constant_error_is_time_averaged(self):
        for n in (10, 1000):
            self.assertAlmostEqual(iae(np.full(n, 0.2), 0.05), 0.2, places=12)
        self.assertAlmostEqual(iae_raw(np.full(100, 0.2), 0.05), 1.0, places=12)

    def test_triangular_ramp(self):
        ramp = np.concatenate([np.linspace(0, 0.4, 201), np.linspace(0.4, 0, 201)[1:]])
        self.assertAlmostEqual(iae(ramp, 0.05), 0.2, delta=1e-3)

    def test_maximum(self):
        self.assertEqual(mle([0.1, -0.9, 0.5]), 0.9)

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=100))
    def test_sign_invariance_and_ordering(self, values):
        e_y = np.array(values)
        self.assertEqual(iae(e_y, 0.05), iae(-e_y, 0.05))
        self.assertEqual(mle(e_y), mle(-e_y))
        self.assertLessEqual(iae(e_y, 0.05), mle(e_y) + 1e-12)

    def test_empty_series(self):
        with self.assertRaises(ConfigurationError):
            iae([], 0.05)


class SpectralMetricTests(SimpleTestCase):
    def test_quiet_signal(self):
        quiet = np.zeros(200)
        self.assertEqual(m_epsilon(quiet, _whole(quiet)), 0.0)
        self.assertEqual(m_zeta(quiet), 0.0)

    def test_low_band_grows_with_tone_power(self):
        loud = m_epsilon(_tone(2.0), _whole(_tone(2.0)))
        soft = m_epsilon(_tone(2.0, 0.1), _whole(_tone(2.0)))
        self.assertGreater(loud, soft)
        self.assertGreater(soft, 0.0)

    def test_band_separation(self):
        low, high = _tone(2.0, 0.1), _tone(6.0, 0.1)
        self.assertGreater(m_epsilon(low, _whole(low)), m_epsilon(high, _whole(high)))
        self.assertGreater(m_zeta(high), m_zeta(low))

    def test_high_band_takes_worst_section(self):
        burst = _tone(6.0, duration=5.0)
        quiet = np.zeros(1200)
        quiet[400:500] = burst
        self.assertAlmostEqual(m_zeta(quiet), m_zeta(burst), delta=0.05 * m_zeta(burst))

    def test_burst_across_section_boundary(self):
        burst = _tone(6.0, duration=5.0)
        quiet = np.zeros(1200)
        quiet[450:550] = burst
        self.assertAlmostEqual(m_zeta(quiet), m_zeta(burst), delta=0.05 * m_zeta(burst))

    def test_sections_overlap_by_half(self):
        self.assertEqual(ZETA.overlap_fraction, 0.5)
        self.assertEqual(EPSILON.overlap_fraction, 0.5)

    @given(st.integers(0, 2 ** 16), st.floats(1.0, 10.0))
    @settings(max_examples=25, deadline=None)
    def test_scaling_never_decreases(self, seed, c):
        signal = np.random.default_rng(seed).normal(scale=0.01, size=300)
        segments = _whole(signal)
        self.assertGreaterEqual(m_epsilon(c * signal, segments) + 1e-12, m_epsilon(signal, segments))
        self.assertGreaterEqual(m_zeta(c * signal) + 1e-12, m_zeta(signal))

    def test_not_applicable(self):
        short = _tone(2.0, duration=4.0)
        self.assertIsNone(m_zeta(short))
        self.assertIsNone(m_epsilon(short, _whole(short)))
        self.assertIsNone(m_epsilon(_tone(2.0), []))

    def test_short_segments_are_dropped(self):
        signal = _tone(2.0, duration=20.0)
        both = m_epsilon(signal, [(0, 60), (100, 300)])
        self.assertEqual(both, m_epsilon(signal, [(100, 300)]))

    def test_scores_per_section(self):
        self.assertEqual(section_scores(_tone(2.0, duration=15.0), F_S, EPSILON).shape, (5,))

    def test_band_within_nyquist(self):
        with self.assertRaises(ConfigurationError):
            section_scores(_tone(2.0), 10.0, ZETA)

    def test_straight_segments(self):
        s = np.arange(0, 100, 1.0)
        self.assertEqual(straight_segments(s, [(60.0, 80.0), (10.0, 20.0)]), [(10, 21), (60, 81)])


def _log(e_y, u_fb, status=COMPLETED):
    n = len(e_y)
    frame = pd.DataFrame(0.0, index=range(n), columns=COLUMNS)
    frame["t"] = np.arange(n) * 0.05
    frame["s"] = np.arange(n) * 0.5
    frame["e_y"] = e_y
    frame["u_fb"] = u_fb
    return SimLog(frame, status, "straight", "test")


class MetricsReportTests(SimpleTestCase):
    trajectory = Trajectory.planned("straight", build_path([Straight(100.0)]), DrivingLimits(30, 1.0, 1.0, 2.0))

    def test_report_fields(self):
        report = evaluate_log(_log(np.full(200, 0.1), np.zeros(200)), self.trajectory)
        self.assertAlmostEqual(report.iae, 0.1)
        self.assertAlmostEqual(report.mle, 0.1)
        self.assertEqual(report.m_epsilon, 0.0)
        self.assertEqual(report.m_zeta, 0.0)
        self.assertFalse(report.diverged)

    def test_diverged_objectives(self):
        report = evaluate_log(_log(np.full(200, 0.1), np.zeros(200), DIVERGED), self.trajectory)
        self.assertTrue(report.diverged)
        self.assertEqual(report.objective("iae"), math.inf)

    def test_json(self):
        report = MetricsReport(0.1, 2.0, 0.3, None, 0.2)
        with tempfile.TemporaryDirectory() as directory:
            target = report.write_json(Path(directory) / "metrics.json", {"seed": 7})
            data = json.loads(target.read_text())
        self.assertIsNone(data["m_epsilon"])
        self.assertEqual(data["provenance"], {"seed": 7})
        self.assertEqual(MetricsReport.from_dict(data), report)


@tag("slow")
class ClosedLoopMetricTests(SimpleTestCase):
    def test_report_from_a_run(self):
        segments = [Straight(120.0), *curve(40.0, math.pi / 2, 10.0), Straight(120.0)]
        trajectory = Trajectory.planned("turn", build_path(segments), DrivingLimits(40, 1.0, 1.0, 2.0))
        log = run_closed_loop(trajectory, bundled_setup("lqr", 1), options=SimulationOptions(plant_step=0.005))
        report = evaluate_log(log, trajectory)
        self.assertFalse(report.diverged)
        self.assertIsNotNone(report.m_epsilon)
        self.assertIsNotNone(report.m_zeta)
        self.assertGreaterEqual(report.mle, report.iae)
        self.assertLess(report.iae, 0.35)

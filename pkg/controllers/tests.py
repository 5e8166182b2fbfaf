import math

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, tag
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_discrete_are

from controllers.forms import load_controller_config
from controllers.services.base import Measurement
from controllers.services.config import (
    FAMILIES,
    MFCConfig,
    NLMPCConfig,
    PIDConfig,
    PreviewConfig,
    SAMFCConfig,
)
from controllers.services.factory import make_controller
from controllers.services.feedforward import feedforward
from controllers.services.lqr import LQRState, lqr_gain, lqr_step
from controllers.services.mfc import MFCState, ipd_control, mfc_step, samfc_gain, samfc_step
from controllers.services.nlmpc import (
    NLMPCState,
    nlmpc_qp,
    nlmpc_step,
    prediction_matrices,
    rate_matrix,
)
from controllers.services.pid import PIDState, pid_step
from controllers.services.runner import COMPLETED, longitudinal_command, run_closed_loop
from controllers.services.setups import bundled_setup, bundled_setups
from lateralbench.exceptions import ConfigurationError
from lateralbench.options import SimulationOptions
from numerics.services.qp import solve_box_rate_qp
from trajectory.services.benchmark import curve
from trajectory.services.paths import Straight, build_path, mirror_segments
from trajectory.services.speed_profile import DrivingLimits, Trajectory
from vehicle.services.error_model import discrete_error_model
from vehicle.services.params import VehicleParams
from vehicle.services.plant import VehicleState

PARAMS = VehicleParams()
OPTIONS = SimulationOptions(plant_step=0.005)
T_S = 0.05


def _measurement(y_1=0.0, e_psi=0.0, v_x=10.0, **kwargs):
    values = dict(t=0.0, y_1=y_1, e_psi=e_psi, v_x=v_x, v_y=0.0, yaw_rate=0.0, kappa=0.0,
                  preview_distance=0.0)
    values.update(kwargs)
    return Measurement(**values)


class FeedforwardTests(SimpleTestCase):
    def test_straight(self):
        self.assertEqual(feedforward(0.0, PARAMS), 0.0)

    def test_curvature(self):
        self.assertAlmostEqual(feedforward(0.01, PARAMS), 0.0464, delta=1e-4)

    @given(st.floats(-0.5, 0.5))
    def test_odd(self, kappa):
        self.assertEqual(feedforward(-kappa, PARAMS), -feedforward(kappa, PARAMS))

    def test_clamped(self):
        self.assertEqual(feedforward(10.0, PARAMS), 1.0)

    @given(st.floats(0, 40), st.floats(0, 40))
    def test_preview_distance_monotone(self, a, b):
        preview = PreviewConfig(d_p0=1.0, t_p=0.5)
        low, high = sorted((a, b))
        self.assertLessEqual(preview.distance(low), preview.distance(high))


class LQRTests(SimpleTestCase):
    config = bundled_setup("lqr", 1).params

    def test_zero_errors(self):
        state = LQRState.fresh(self.config)
        self.assertEqual(lqr_step(0.0, 0.0, 10.0, state, self.config, PARAMS, OPTIONS), 0.0)

    def test_gain_matches_reference_solver(self):
        model = discrete_error_model(10.0, PARAMS, T_S)
        Q, R = np.diag(self.config.weights), np.eye(1)
        P = solve_discrete_are(model.A, model.B, Q, R)
        expected = np.linalg.solve(R + model.B.T @ P @ model.B, model.B.T @ P @ model.A)
        np.testing.assert_allclose(lqr_gain(10.0, self.config.weights, PARAMS, T_S), expected, atol=1e-6)

    def test_closed_loop_stable_for_all_setups(self):
        for setup in bundled_setups()["lqr"]:
            for v_x in (5.0, 15.0, 25.0):
                model = discrete_error_model(v_x, PARAMS, T_S)
                K = lqr_gain(v_x, setup.params.weights, PARAMS, T_S)
                self.assertLess(np.max(np.abs(np.linalg.eigvals(model.A - model.B @ K))), 1.0)

    def test_steers_toward_path(self):
        state = LQRState.fresh(self.config)
        self.assertLess(lqr_step(0.5, 0.0, 10.0, state, self.config, PARAMS, OPTIONS), 0.0)

    def test_gain_rescheduled_on_speed_change(self):
        state = LQRState.fresh(self.config)
        lqr_step(0.0, 0.0, 10.0, state, self.config, PARAMS, OPTIONS)
        lqr_step(0.0, 0.0, 10.4, state, self.config, PARAMS, OPTIONS)
        self.assertEqual(state.scheduled_speed, 10.0)
        lqr_step(0.0, 0.0, 10.6, state, self.config, PARAMS, OPTIONS)
        self.assertEqual(state.scheduled_speed, 10.6)

    def test_low_speed_uses_floor(self):
        state = LQRState.fresh(self.config)
        lqr_step(0.1, 0.0, 0.0, state, self.config, PARAMS, OPTIONS)
        self.assertEqual(state.scheduled_speed, OPTIONS.min_model_speed)


class MFCTests(SimpleTestCase):
    def test_first_tick_is_proportional(self):
        self.assertAlmostEqual(ipd_control(0.5, MFCState.fresh(), 2.0, 1.0, 10.0, T_S), -0.1)

    def test_zero_output_stays_zero(self):
        state = MFCState.fresh()
        outputs = [ipd_control(0.0, state, 2.0, 1.0, 10.0, T_S) for _ in range(20)]
        self.assertEqual(outputs[-1], 0.0)

    def test_double_integrator_regulation(self):
        F_star, alpha, y, y_rate = 2.0, 10.0, 1.0, 0.0
        state = MFCState.fresh()
        for _ in range(200):
            u = ipd_control(y, state, 4.0, 4.0, alpha, T_S)
            acceleration = F_star + alpha * u
            y += T_S * y_rate + 0.5 * T_S ** 2 * acceleration
            y_rate += T_S * acceleration
        self.assertLess(abs(y), 0.02)
        self.assertAlmostEqual(state.estimate, F_star, delta=0.02 * F_star)

    def test_nonpositive_alpha(self):
        with self.assertRaises(ConfigurationError):
            ipd_control(0.0, MFCState.fresh(), 1.0, 1.0, 0.0, T_S)

    def test_samfc_gain(self):
        setup = bundled_setup("samfc", 2).params
        self.assertEqual(samfc_gain(0.0, setup), 93.6)
        self.assertAlmostEqual(samfc_gain(20.0, setup), 165.8, places=9)

    @given(st.floats(0, 50), st.floats(0, 50))
    def test_samfc_gain_monotone(self, a, b):
        setup = bundled_setup("samfc", 2).params
        low, high = sorted((a, b))
        self.assertLessEqual(samfc_gain(low, setup), samfc_gain(high, setup))

    def test_samfc_gain_continuous(self):
        setup = bundled_setup("samfc", 2).params
        self.assertAlmostEqual(samfc_gain(setup.v_x0 - 1e-9, setup), samfc_gain(setup.v_x0, setup), places=6)

    @given(st.lists(st.floats(-2, 2), min_size=1, max_size=40), st.floats(0, 30))
    @settings(max_examples=40, deadline=None)
    def test_samfc_without_adaptation_is_mfc(self, outputs, v_x):
        mfc = MFCConfig(K_p=0.5, K_d=2.0, alpha=90.0)
        samfc = SAMFCConfig(K_p=0.5, K_d=2.0, alpha_0=90.0, v_x0=5.0, K_alpha=0.0)
        a, b = MFCState.fresh(), MFCState.fresh()
        for y in outputs:
            self.assertEqual(mfc_step(y, a, mfc, T_S), samfc_step(y, v_x, b, samfc, T_S))


class PIDTests(SimpleTestCase):
    def test_zero_error(self):
        config = bundled_setup("pid", 1).params
        state = PIDState.fresh(config, T_S)
        self.assertTrue(all(pid_step(0.0, state, config, T_S) == 0.0 for _ in range(50)))

    def test_steady_proportional_action(self):
        config = PIDConfig(K_p=0.16, K_i=0.0, K_d=0.03, N_PID=8)
        state = PIDState.fresh(config, T_S)
        for _ in range(200):
            u = pid_step(0.1, state, config, T_S)
        self.assertAlmostEqual(u, 0.016, delta=1e-12)

    def test_step_matches_difference_equation(self):
        for config in (PIDConfig(0.16, 0.0, 0.03, 8), PIDConfig(0.2, 0.5, 0.05, 15)):
            state = PIDState.fresh(config, T_S)
            pole = 1.0 - config.N_PID * T_S
            previous_e, derivative, integral = 0.0, 0.0, 0.0
            for k in range(100):
                e = 1.0
                derivative = pole * derivative + config.K_d * config.N_PID * (e - previous_e)
                expected = config.K_p * e + config.K_i * integral + derivative
                self.assertAlmostEqual(pid_step(e, state, config, T_S), expected, delta=1e-9)
                integral += T_S * e
                previous_e = e

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=30), st.floats(0, 3))
    @settings(max_examples=40, deadline=None)
    def test_pure_proportional(self, errors, K_p):
        config = PIDConfig(K_p=K_p, K_i=0.0, K_d=0.0, N_PID=10)
        state = PIDState.fresh(config, T_S)
        for e in errors:
            self.assertEqual(pid_step(e, state, config, T_S), K_p * e)


class NLMPCTests(SimpleTestCase):
    config = NLMPCConfig(h_p=11, h_c=3, w_rate=15.0)

    def test_prediction_matches_simulation(self):
        model = discrete_error_model(10.0, PARAMS, T_S)
        Phi, Gamma = prediction_matrices(model, 11, 3)
        x0 = np.array([0.2, -0.1, 0.05, 0.01])
        z = np.array([0.3, -0.2, 0.1])
        x, outputs = x0.copy(), []
        for i in range(11):
            x = model.A @ x + model.B[:, 0] * z[min(i, 2)]
            outputs.append(x[0])
        np.testing.assert_allclose(Phi @ x0 + Gamma @ z, outputs, atol=1e-12)

    def test_origin_is_optimal(self):
        self.assertEqual(nlmpc_step(np.zeros(4), 10.0, NLMPCState(), self.config, PARAMS, OPTIONS), 0.0)

    def test_heavy_rate_weight_freezes_command(self):
        heavy = NLMPCConfig(h_p=11, h_c=3, w_rate=1e8)
        u = nlmpc_step(np.array([1.0, 0.0, 0.05, 0.0]), 10.0, NLMPCState(), heavy, PARAMS, OPTIONS)
        self.assertLess(abs(u), 1e-3)

    def test_unconstrained_solution_matches_least_squares(self):
        model = discrete_error_model(10.0, PARAMS, T_S)
        x0 = np.array([0.01, 0.0, 0.0, 0.0])
        Phi, Gamma = prediction_matrices(model, 11, 3, PARAMS.delta_max / PARAMS.R_S)
        D = rate_matrix(3)
        stacked = np.vstack([Gamma, math.sqrt(15.0) * D])
        target = np.concatenate([-Phi @ x0, np.zeros(3)])
        expected = np.linalg.lstsq(stacked, target, rcond=None)[0]

        state = NLMPCState()
        u = nlmpc_step(x0, 10.0, state, self.config, PARAMS, OPTIONS)
        np.testing.assert_allclose(state.solution, expected, atol=1e-6)
        self.assertAlmostEqual(u, expected[0], delta=1e-6)
        self.assertTrue(state.last_result.converged)

    def test_rate_cost_monotone_in_weight(self):
        model = discrete_error_model(15.0, PARAMS, T_S)
        x0 = np.array([0.8, 0.3, 0.1, 0.0])
        rate = PARAMS.delta_rate_max * T_S / PARAMS.delta_max
        effort = []
        for weight in (0.5, 2.0, 8.0, 32.0, 128.0):
            config = NLMPCConfig(h_p=13, h_c=4, w_rate=weight)
            H, g = nlmpc_qp(x0, model, config, PARAMS, previous_u=0.1)
            result = solve_box_rate_qp(H, g, previous=0.1, rate=rate, max_iter=200)
            self.assertTrue(result.converged)
            effort.append(np.sum(np.diff(np.concatenate([[0.1], result.solution])) ** 2))
        self.assertTrue(all(b <= a + 1e-12 for a, b in zip(effort, effort[1:])))

    def test_steers_toward_path(self):
        u = nlmpc_step(np.array([0.5, 0.0, 0.0, 0.0]), 10.0, NLMPCState(), self.config, PARAMS, OPTIONS)
        self.assertLess(u, 0.0)


class ControllerObjectTests(SimpleTestCase):
    @given(st.floats(-5, 5), st.floats(-0.5, 0.5), st.floats(0, 30))
    @settings(max_examples=30, deadline=None)
    def test_outputs_stay_normalized(self, y_1, e_psi, v_x):
        for setups in bundled_setups().values():
            controller = make_controller(setups[0], PARAMS, OPTIONS)
            for _ in range(3):
                u = controller.step(_measurement(y_1, e_psi, v_x))
                self.assertLessEqual(abs(u), 1.0)

    def test_all_families_steer_toward_a_path_on_the_left(self):
        for kind, setups in bundled_setups().items():
            config = setups[0]
            if kind in ("mfc", "samfc"):
                config = config.with_params(K_p=1.0)
            controller = make_controller(config, PARAMS, OPTIONS)
            self.assertGreater(controller.step(_measurement(y_1=0.5)), 0.0, kind)


class BundledSetupTests(SimpleTestCase):
    def test_fifteen_setups_in_family_order(self):
        setups = bundled_setups()
        self.assertEqual(list(setups), list(FAMILIES))
        self.assertEqual(sum(len(v) for v in setups.values()), 15)

    def test_table_values(self):
        self.assertEqual(bundled_setup("lqr", 1).params.N_LQR, 6.158)
        self.assertEqual(bundled_setup("nlmpc", 3).params.h_p, 21)
        self.assertEqual(bundled_setup("pid", 2).preview.t_p, 0.059)
        self.assertEqual(bundled_setup("samfc", 3).params.K_p, 0.125)

    def test_mfc_setups_carry_notes(self):
        for index in (1, 2, 3):
            self.assertIn("K_p", bundled_setup("mfc", index).notes)

    def test_missing_setup(self):
        with self.assertRaises(ConfigurationError):
            bundled_setup("lqr", 4)


class ControllerFormTests(SimpleTestCase):
    def test_valid_mapping(self):
        config = load_controller_config({
            "type": "nlmpc", "params": {"h_p": 11, "h_c": 3, "w_rate": 15.0},
            "preview": {"d_p0": 0.0, "t_p": 0.2},
        })
        self.assertEqual(config.params, NLMPCConfig(11, 3, 15.0))
        self.assertEqual(config.preview.t_p, 0.2)

    def test_round_trip_of_bundled_setup(self):
        setup = bundled_setup("samfc", 2)
        self.assertEqual(load_controller_config(setup.to_dict()), setup)

    def test_rejections(self):
        bad = [
            {"type": "fuzzy", "params": {}},
            {"type": "nlmpc", "params": {"h_p": 3, "h_c": 5, "w_rate": 1.0}},
            {"type": "pid", "params": {"K_p": -1, "K_i": 0, "K_d": 0, "N_PID": 5}},
            {"type": "pid", "params": {"K_p": 1, "K_i": 0, "K_d": 0, "N_PID": 5, "K_x": 1}},
            {"type": "mfc", "params": {"K_p": 1, "K_d": 1}},
            {"type": "lqr", "params": bundled_setup("lqr", 1).to_dict()["params"], "preview": {"t_p": -1}},
        ]
        for data in bad:
            with self.assertRaises(ConfigurationError):
                load_controller_config(data)

    def test_missing_preview_is_named(self):
        data = bundled_setup("pid", 1).to_dict()
        del data["preview"]
        with self.assertRaisesMessage(ConfigurationError, "preview"):
            load_controller_config(data)


def _trajectory(segments, limits=DrivingLimits(30, 1.0, 1.0, 2.0), name="test"):
    return Trajectory.planned(name, build_path(segments), limits)


class LongitudinalCommandTests(SimpleTestCase):
    def test_starts_from_rest(self):
        trajectory = _trajectory([Straight(60.0)])
        self.assertGreater(longitudinal_command(trajectory, 0.0, 0.0, OPTIONS), 0.0)

    def test_respects_limits(self):
        trajectory = _trajectory([Straight(60.0)])
        self.assertEqual(longitudinal_command(trajectory, 30.0, 40.0, OPTIONS), -1.0)


@tag("slow")
class ClosedLoopTests(SimpleTestCase):
    def test_straight_line_regulation_for_every_setup(self):
        trajectory = _trajectory([Straight(60.0)])
        for setups in bundled_setups().values():
            for config in setups:
                log = run_closed_loop(trajectory, config, options=OPTIONS)
                self.assertEqual(log.status, COMPLETED, config.label)
                self.assertLess(np.max(np.abs(log.column("e_y"))), 0.05, config.label)

    def test_offset_decreases(self):
        path = build_path([Straight(200.0)])
        trajectory = Trajectory("flat", path, np.full(len(path), 10.0), DrivingLimits(50, 2.0, 2.0, 4.0))
        start = VehicleState(y=0.5, v_x=10.0).as_array()
        for config in (bundled_setup("lqr", 1), bundled_setup("pid", 1)):
            log = run_closed_loop(trajectory, config, options=OPTIONS, state=start)
            self.assertEqual(log.status, COMPLETED, config.label)
            self.assertAlmostEqual(log.column("e_y")[0], 0.5, places=9)
            tail = np.abs(log.column("e_y")[-60:])
            self.assertLess(tail.max(), 0.25, config.label)

    def test_mirrored_trajectory_gives_mirrored_log(self):
        segments = [Straight(30.0), *curve(25.0, math.pi / 2, 8.0), Straight(20.0), *curve(25.0, -math.pi / 3, 8.0),
                    Straight(30.0)]
        direct = _trajectory(segments)
        mirrored = _trajectory(mirror_segments(segments))
        odd = ["y", "heading", "y_1", "e_psi", "e_y", "kappa_preview", "kappa", "u_ff", "u_fb", "u_total", "delta_t"]
        for kind in FAMILIES:
            config = bundled_setup(kind, 2)
            a = run_closed_loop(direct, config, options=OPTIONS).frame
            b = run_closed_loop(mirrored, config, options=OPTIONS).frame
            self.assertEqual(len(a), len(b), kind)
            for column in a.columns:
                sign = -1.0 if column in odd else 1.0
                np.testing.assert_allclose(b[column].to_numpy(dtype=float), sign * a[column].to_numpy(dtype=float),
                                           atol=1e-9, err_msg=f"{kind}:{column}")

    def test_repeat_runs_are_identical(self):
        trajectory = _trajectory([Straight(30.0), *curve(25.0, math.pi / 2, 8.0), Straight(30.0)])
        config = bundled_setup("nlmpc", 1)
        first = run_closed_loop(trajectory, config, options=OPTIONS, seed=3)
        second = run_closed_loop(trajectory, config, options=OPTIONS, seed=3)
        pd.testing.assert_frame_equal(first.frame, second.frame)
        self.assertEqual(len(first.runtimes), len(first))

    def test_log_columns(self):
        log = run_closed_loop(_trajectory([Straight(30.0)]), bundled_setup("pid", 1), options=OPTIONS)
        self.assertEqual(list(log.frame.columns)[:4], ["t", "s", "x", "y"])
        self.assertTrue(np.all(np.abs(log.column("u_total")) <= 1.0))
        np.testing.assert_allclose(log.column("delta_t"), PARAMS.delta_max * log.column("u_total"))

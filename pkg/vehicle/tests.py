import json
import math
import tempfile
from pathlib import Path as FilePath

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from lateralbench.exceptions import ConfigurationError, DegenerateSpeedError, EndOfPathError
from numerics.services.integration import integrate_rk4
from trajectory.services.paths import Arc, Straight, build_path
from vehicle.forms import load_vehicle_params
from vehicle.services.error_model import discrete_error_model, linearized_error_model
from vehicle.services.params import VehicleParams
from vehicle.services.plant import VehicleState, advance, lateral_derivatives, plant_step
from vehicle.services.steering import steering_lowlevel_step
from vehicle.services.tires import LINEAR, MAGIC_FORMULA, TireModel, lateral_tire_forces
from vehicle.services.tracking import PathTracker, tracking_errors, wrap_angle

PARAMS = VehicleParams()
LINEAR_TIRES = TireModel(LINEAR)
MAGIC_TIRES = TireModel(MAGIC_FORMULA)


class VehicleParamsTests(SimpleTestCase):
    def test_defaults(self):
        self.assertEqual(PARAMS.m, 1372.0)
        self.assertAlmostEqual(PARAMS.wheelbase, 2.46)

    def test_invalid_friction(self):
        with self.assertRaises(ConfigurationError):
            VehicleParams(mu=2.0)

    def test_nonpositive_mass(self):
        with self.assertRaises(ConfigurationError):
            VehicleParams(m=0.0)


class LateralTireForceTests(SimpleTestCase):
    def test_zero_slip(self):
        self.assertEqual(lateral_tire_forces(10.0, 0.0, 0.0, 0.0, PARAMS, LINEAR_TIRES), (0.0, 0.0))

    def test_linear_front_force(self):
        F_yf, F_yr = lateral_tire_forces(10.0, 0.0, 0.0, 0.01, PARAMS, LINEAR_TIRES)
        self.assertAlmostEqual(F_yf, 740.45, places=6)
        self.assertEqual(F_yr, 0.0)

    def test_magic_formula_saturates_below_peak(self):
        slips = np.linspace(0.0, math.radians(30.0), 200)
        forces = np.array([
            lateral_tire_forces(10.0, 0.0, 0.0, slip, PARAMS, MAGIC_TIRES)[0] for slip in slips
        ])
        peak = PARAMS.mu * PARAMS.front_axle_load
        self.assertTrue(np.all(np.abs(forces) <= peak + 1e-9))
        top = int(np.argmax(forces))
        self.assertTrue(np.all(np.diff(forces[:top + 1]) >= 0))
        self.assertGreater(forces[-1], 0.95 * peak)

    def test_models_agree_at_small_slip(self):
        for slip in np.linspace(math.radians(0.05), math.radians(0.99), 20):
            linear = lateral_tire_forces(10.0, -10.0 * math.tan(slip), 0.0, 0.0, PARAMS, LINEAR_TIRES)
            magic = lateral_tire_forces(10.0, -10.0 * math.tan(slip), 0.0, 0.0, PARAMS, MAGIC_TIRES)
            for lin, mf in zip(linear, magic):
                self.assertLess(abs(mf - lin) / abs(lin), 0.03)

    def test_degenerate_speed(self):
        with self.assertRaises(DegenerateSpeedError):
            lateral_tire_forces(0.05, 0.0, 0.0, 0.0, PARAMS, LINEAR_TIRES)


class SteeringTests(SimpleTestCase):
    def test_on_target_gives_zero_torque(self):
        self.assertEqual(steering_lowlevel_step(0.4, 0.0, 0.4, PARAMS), 0.0)

    def test_proportional_gain(self):
        self.assertAlmostEqual(steering_lowlevel_step(0.0, 0.0, 0.1, PARAMS), 1.8)

    def test_step_response_overshoot(self):
        state = VehicleState().as_array()
        history = []
        for _ in range(300):
            state = advance(state, 1.0, 0.0, 0.01, 1, PARAMS)
            history.append(state[6])
        self.assertLess(max(history), 1.1)
        self.assertAlmostEqual(history[-1], 1.0, delta=0.02)


class PlantTests(SimpleTestCase):
    def test_straight_equilibrium(self):
        state = VehicleState(v_x=10.0).as_array()
        for _ in range(1000):
            state = plant_step(state, 0.0, 0.0, 0.001, PARAMS)
        self.assertEqual(state[4], 0.0)
        self.assertEqual(state[5], 0.0)
        self.assertAlmostEqual(state[0], 10.0, places=9)
        self.assertAlmostEqual(state[3], 10.0, places=12)

    def test_steady_state_yaw_rate(self):
        v_x, delta = 10.0, 0.01

        def derivative(x, _):
            dv_y, dr, _, _ = lateral_derivatives(v_x, x[0], x[1], delta, PARAMS, LINEAR_TIRES)
            return np.array([dv_y, dr])

        x = np.zeros(2)
        for _ in range(5000):
            x = integrate_rk4(x, derivative, None, 0.001)

        L = PARAMS.wheelbase
        understeer = PARAMS.m / L * (PARAMS.l_r / (2 * PARAMS.C_f) - PARAMS.l_f / (2 * PARAMS.C_r))
        expected = v_x * delta / (L + understeer * v_x ** 2)
        self.assertLess(abs(x[1] - expected) / expected, 0.02)

    def test_lateral_states_decay(self):
        v_x = 20.0

        def derivative(x, _):
            dv_y, dr, _, _ = lateral_derivatives(v_x, x[0], x[1], 0.0, PARAMS, LINEAR_TIRES)
            return np.array([dv_y, dr])

        x = np.array([0.5, 0.1])
        for _ in range(500):
            x = integrate_rk4(x, derivative, None, 0.01)
        self.assertLess(np.max(np.abs(x)), 1e-3)

    def test_mirror_symmetry(self):
        state = np.array([0.0, 0.0, 0.0, 10.0, 0.1, 0.05, 0.5, 0.2])
        mirror = np.array([1, -1, -1, 1, -1, -1, -1, -1], dtype=float)
        for tire in (LINEAR_TIRES, MAGIC_TIRES):
            direct = advance(state, 1.2, 0.3, 0.001, 200, PARAMS, tire)
            mirrored = advance(state * mirror, -1.2, 0.3, 0.001, 200, PARAMS, tire)
            np.testing.assert_allclose(mirrored, direct * mirror, atol=1e-12)

    def test_starts_from_rest(self):
        state = VehicleState().as_array()
        state = advance(state, 0.0, 1.0, 0.001, 2000, PARAMS)
        self.assertAlmostEqual(state[3], 2.0, delta=1e-6)
        self.assertAlmostEqual(state[0], 2.0, delta=1e-3)

    def test_plant_step_range(self):
        with self.assertRaises(ConfigurationError):
            plant_step(VehicleState().as_array(), 0.0, 0.0, 0.02, PARAMS)

    @given(st.lists(st.floats(-50.0, 50.0), min_size=1, max_size=40))
    @settings(max_examples=40, deadline=None)
    def test_steering_limits_hold(self, torques):
        state = VehicleState(v_x=5.0, delta_d=8.0).as_array()
        for torque in torques:
            for _ in range(5):
                state = plant_step(state, torque, 0.0, 0.005, PARAMS)
                self.assertLessEqual(abs(state[6]), PARAMS.delta_max)
                self.assertLessEqual(abs(state[7]), PARAMS.delta_rate_max)


class ErrorModelTests(SimpleTestCase):
    def test_velocity_damping_entry(self):
        model = linearized_error_model(10.0, PARAMS)
        self.assertAlmostEqual(model.A[1, 1], -145845 / 13720, places=9)

    def test_input_entry_independent_of_speed(self):
        for v_x in (5.0, 10.0, 30.0):
            self.assertAlmostEqual(linearized_error_model(v_x, PARAMS).B[1, 0], 74045 / 1372, places=9)

    def test_speed_dependent_entries_scale_inversely(self):
        slow = linearized_error_model(10.0, PARAMS).A
        fast = linearized_error_model(20.0, PARAMS).A
        for row, col in ((1, 1), (1, 3), (3, 1), (3, 3)):
            self.assertAlmostEqual(fast[row, col], slow[row, col] / 2, places=9)

    def test_matches_jacobian_of_nonlinear_dynamics(self):
        for v_x in (5.0, 10.0, 20.0):
            def f(errors, delta):
                e_y, de_y, e_psi, de_psi = errors
                dv_y, dr, _, _ = lateral_derivatives(v_x, de_y - v_x * e_psi, de_psi, delta, PARAMS, LINEAR_TIRES)
                return np.array([de_y, dv_y + v_x * de_psi, de_psi, dr])

            h = 1e-6
            jacobian = np.zeros((4, 4))
            for j in range(4):
                step = np.zeros(4)
                step[j] = h
                jacobian[:, j] = (f(step, 0.0) - f(-step, 0.0)) / (2 * h)
            input_column = (f(np.zeros(4), h) - f(np.zeros(4), -h)) / (2 * h)

            model = linearized_error_model(v_x, PARAMS)
            np.testing.assert_allclose(jacobian, model.A, rtol=0.05, atol=1e-4)
            np.testing.assert_allclose(input_column, model.B[:, 0], rtol=0.05, atol=1e-4)

    def test_degenerate_speed(self):
        with self.assertRaises(DegenerateSpeedError):
            linearized_error_model(0.5, PARAMS)

    def test_discrete_model_is_cached(self):
        self.assertIs(discrete_error_model(10.0, PARAMS, 0.05), discrete_error_model(10.0, PARAMS, 0.05))


class TrackingErrorTests(SimpleTestCase):
    def setUp(self):
        self.straight = build_path([Straight(100.0)], ds=0.5)

    def test_on_path(self):
        errors = tracking_errors((10.0, 0.0, 0.0), self.straight, 5.0)
        self.assertAlmostEqual(errors.y_1, 0.0)
        self.assertAlmostEqual(errors.e_psi, 0.0)
        self.assertAlmostEqual(errors.s, 10.0)

    def test_parallel_offset_to_the_right(self):
        for preview in (0.0, 3.0, 12.0):
            errors = tracking_errors((20.0, -0.5, 0.0), self.straight, preview)
            self.assertAlmostEqual(errors.y_1, 0.5, places=9)
            self.assertAlmostEqual(errors.e_psi, 0.0)
            self.assertAlmostEqual(errors.e_y, -0.5, places=9)

    def test_preview_on_arc_is_sagitta(self):
        radius, s0, preview = 50.0, 20.0, 10.0
        path = build_path([Arc(radius, math.pi / 2)], ds=0.5)
        state = (radius * math.sin(s0 / radius), radius * (1 - math.cos(s0 / radius)), s0 / radius)
        errors = tracking_errors(state, path, preview)
        self.assertAlmostEqual(errors.y_1, preview ** 2 / (2 * radius), delta=0.02)
        self.assertAlmostEqual(errors.e_psi, 0.0, delta=1e-3)
        self.assertAlmostEqual(errors.kappa, 1.0 / radius)

    def test_preview_extends_past_end(self):
        errors = tracking_errors((99.0, 0.0, 0.0), self.straight, 10.0)
        self.assertAlmostEqual(errors.y_1, 0.0)
        self.assertEqual(errors.kappa_preview, 0.0)

    def test_beyond_end(self):
        with self.assertRaises(EndOfPathError):
            tracking_errors((101.0, 0.0, 0.0), self.straight, 1.0)

    def test_tracker_follows_progress(self):
        tracker = PathTracker(self.straight)
        for x in np.arange(0.0, 99.0, 0.7):
            errors = tracking_errors((x, 0.2, 0.0), self.straight, 2.0, tracker)
            self.assertAlmostEqual(errors.s, x, places=9)

    def test_wrap_angle(self):
        self.assertAlmostEqual(wrap_angle(3 * math.pi / 2), -math.pi / 2)
        self.assertAlmostEqual(wrap_angle(-math.pi), math.pi)

    def test_negative_preview(self):
        with self.assertRaises(ConfigurationError):
            tracking_errors((0.0, 0.0, 0.0), self.straight, -1.0)


class VehicleFormTests(SimpleTestCase):
    def test_defaults_without_source(self):
        self.assertEqual(load_vehicle_params(), PARAMS)

    def test_partial_mapping(self):
        params = load_vehicle_params({"m": 1500, "mu": 0.8})
        self.assertEqual(params.m, 1500.0)
        self.assertEqual(params.mu, 0.8)
        self.assertEqual(params.C_f, PARAMS.C_f)

    def test_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = FilePath(tmp) / "vehicle.json"
            target.write_text(json.dumps({"R_S": 15.0}))
            self.assertEqual(load_vehicle_params(target).R_S, 15.0)

    def test_rejects_bad_values(self):
        for data in ({"mu": 2.0}, {"m": -1}, {"wheels": 4}, {"C_f": "stiff"}):
            with self.assertRaises(ConfigurationError):
                load_vehicle_params(data)

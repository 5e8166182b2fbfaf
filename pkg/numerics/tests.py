import math

import numpy as np
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_discrete_are

from lateralbench.exceptions import (
    ConfigurationError,
    EmptySpectrogramError,
    IntegrationError,
    SolverError,
)
from numerics.services.filters import FilterState, filtered_derivative_step, highpass_filter
from numerics.services.integration import integrate_rk4
from numerics.services.qp import project_feasible, solve_box_rate_qp
from numerics.services.riccati import (
    StateSpaceModel,
    discretize_zoh,
    riccati_residual,
    riccati_solution,
    solve_dare,
)
from numerics.services.sampling import Normal, SeedStream, Uniform, sample_distribution
from numerics.services.spectral import stft_power


def _exp_derivative(x, _):
    return x


class IntegrateRK4Tests(SimpleTestCase):
    def test_zero_derivative_keeps_state(self):
        result = integrate_rk4(np.array([3.0]), lambda x, u: np.zeros_like(x), None, 0.05)
        self.assertEqual(result[0], 3.0)

    def test_constant_derivative(self):
        result = integrate_rk4(np.array([0.0]), lambda x, u: np.ones_like(x), None, 0.05)
        self.assertAlmostEqual(result[0], 0.05, places=14)

    def test_exponential_matches_closed_form(self):
        result = integrate_rk4(np.array([1.0]), _exp_derivative, None, 0.05)
        self.assertAlmostEqual(result[0], math.exp(0.05), delta=1e-8)

    def test_halving_step_reduces_error_sixteen_fold(self):
        def error(dt, horizon=1.0):
            x = np.array([1.0])
            for _ in range(int(round(horizon / dt))):
                x = integrate_rk4(x, _exp_derivative, None, dt)
            return abs(x[0] - math.e)

        ratio = error(0.1) / error(0.05)
        self.assertGreater(ratio, 14.0)
        self.assertLess(ratio, 18.0)

    def test_non_finite_derivative_raises(self):
        with self.assertRaises(IntegrationError):
            integrate_rk4(np.array([1.0]), lambda x, u: np.array([np.nan]), None, 0.01)

    def test_nonpositive_step_rejected(self):
        with self.assertRaises(ConfigurationError):
            integrate_rk4(np.array([1.0]), _exp_derivative, None, 0.0)


class SolveDareTests(SimpleTestCase):
    def test_zero_dynamics_give_zero_gain(self):
        K = solve_dare([[0.0]], [[1.0]], [[1.0]], [[1.0]])
        self.assertEqual(K[0, 0], 0.0)

    def test_scalar_closed_form(self):
        P = riccati_solution([[1.0]], [[1.0]], [[1.0]], [[1.0]])
        K = solve_dare([[1.0]], [[1.0]], [[1.0]], [[1.0]])
        self.assertAlmostEqual(P[0, 0], (1 + math.sqrt(5)) / 2, delta=1e-8)
        self.assertAlmostEqual(K[0, 0], 0.6180339887, delta=1e-8)

    def test_random_stable_systems_match_reference_solver(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            A = rng.normal(size=(4, 4))
            A *= 0.9 / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-9)
            B = rng.normal(size=(4, 1))
            Q = np.diag(rng.uniform(0.1, 2.0, size=4))
            R = np.array([[rng.uniform(0.5, 2.0)]])

            K = solve_dare(A, B, Q, R)
            P_ref = solve_discrete_are(A, B, Q, R)
            K_ref = np.linalg.solve(R + B.T @ P_ref @ B, B.T @ P_ref @ A)

            np.testing.assert_allclose(K, K_ref, atol=1e-8)
            P = riccati_solution(A, B, Q, R)
            self.assertLess(riccati_residual(A, B, Q, R, P), 1e-8)
            self.assertLess(np.max(np.abs(np.linalg.eigvals(A - B @ K))), 1.0)

    def test_indefinite_r_rejected(self):
        with self.assertRaises(ConfigurationError):
            solve_dare([[1.0]], [[1.0]], [[1.0]], [[-1.0]])

    @override_settings(LATERAL_BENCH={"DARE_MAX_ITER": 1})
    def test_iteration_cap_comes_from_settings(self):
        with self.assertRaises(SolverError):
            solve_dare([[1.0]], [[1.0]], [[1.0]], [[1.0]])
        P = riccati_solution([[1.0]], [[1.0]], [[1.0]], [[1.0]], max_iterations=1000)
        self.assertAlmostEqual(P[0, 0], (1 + math.sqrt(5)) / 2, delta=1e-8)


class DiscretizationTests(SimpleTestCase):
    def test_integrator_discretization(self):
        model = StateSpaceModel(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]))
        discrete = discretize_zoh(model, 0.1)
        np.testing.assert_allclose(discrete.A, [[1.0, 0.1], [0.0, 1.0]], atol=1e-12)
        np.testing.assert_allclose(discrete.B, [[0.005], [0.1]], atol=1e-12)
        self.assertEqual(discrete.sample_time, 0.1)

    def test_inconsistent_dimensions_rejected(self):
        with self.assertRaises(ConfigurationError):
            StateSpaceModel(np.eye(2), np.ones((3, 1)))


class FilteredDerivativeTests(SimpleTestCase):
    def test_constant_signal_settles_to_zero(self):
        state = FilterState(smoothing=1.5, previous_input=0.0)
        outputs = [filtered_derivative_step(state, 1.0, 0.05) for _ in range(12)]
        self.assertLess(abs(outputs[10]), 1e-3)

    def test_ramp_converges_to_slope(self):
        state = FilterState(smoothing=1.5)
        output = 0.0
        for k in range(200):
            output = filtered_derivative_step(state, 2.0 * k * 0.05, 0.05)
        self.assertAlmostEqual(output, 2.0, delta=1e-6)

    def test_step_matches_difference_equation(self):
        C, T_s = 1.5, 0.05
        state = FilterState(smoothing=C, previous_input=0.0)
        previous_x, previous_y = 0.0, 0.0
        for k in range(20):
            expected = ((1.0 - previous_x) / T_s - (1.0 - C) * previous_y) / C
            previous_x, previous_y = 1.0, expected
            self.assertAlmostEqual(filtered_derivative_step(state, 1.0, T_s), expected, places=12)

    def test_bandwidth_form_is_backward_difference_when_n_ts_is_one(self):
        state = FilterState.from_bandwidth(20.0, 0.05, previous_input=0.0)
        self.assertAlmostEqual(filtered_derivative_step(state, 0.3, 0.05), 6.0, places=12)

    @given(
        st.lists(st.floats(-10, 10), min_size=2, max_size=30),
        st.floats(-3, 3),
        st.floats(-3, 3),
    )
    @settings(max_examples=50, deadline=None)
    def test_linearity(self, samples, a, b):
        other = [0.5 * s - 1.0 for s in samples]
        fx, fy, fz = (FilterState(smoothing=2.0, previous_input=0.0) for _ in range(3))
        for x, y in zip(samples, other):
            combined = filtered_derivative_step(fz, a * x + b * y, 0.05)
            separate = a * filtered_derivative_step(fx, x, 0.05) + b * filtered_derivative_step(fy, y, 0.05)
            self.assertAlmostEqual(combined, separate, delta=1e-6 * (1 + abs(separate)))

    def test_nonpositive_smoothing_rejected(self):
        with self.assertRaises(ConfigurationError):
            FilterState(smoothing=0.0)


class HighpassFilterTests(SimpleTestCase):
    f_s = 20.0

    def _steady_amplitude(self, frequency, cutoff, duration=200.0):
        t = np.arange(int(duration * self.f_s)) / self.f_s
        filtered = highpass_filter(np.sin(2 * np.pi * frequency * t), self.f_s, cutoff)
        middle = filtered[len(filtered) // 4: 3 * len(filtered) // 4]
        return np.max(np.abs(middle))

    def test_constant_is_rejected(self):
        filtered = highpass_filter(np.full(400, 3.0), self.f_s, 0.5)
        self.assertLess(np.max(np.abs(filtered[100:])), 3e-3)

    def test_passband_tone_preserved(self):
        gain_db = 20 * np.log10(self._steady_amplitude(6.0, 4.0, duration=30.0))
        self.assertLess(abs(gain_db), 1.0)

    def test_slow_tone_attenuated(self):
        gain_db = 20 * np.log10(self._steady_amplitude(0.1, 0.5))
        self.assertLess(gain_db, -20.0)

    def test_cutoff_out_of_range(self):
        with self.assertRaises(ConfigurationError):
            highpass_filter(np.zeros(100), self.f_s, 10.0)


class StftPowerTests(SimpleTestCase):
    f_s = 20.0

    def test_zero_signal(self):
        spectrogram = stft_power(np.zeros(300), self.f_s)
        self.assertTrue(np.all(spectrogram.power == 0))
        self.assertEqual(spectrogram.frequencies[0], 0.0)
        self.assertEqual(spectrogram.frequencies[-1], self.f_s / 2)

    def test_tone_location(self):
        t = np.arange(400) / self.f_s
        spectrogram = stft_power(np.sin(2 * np.pi * 2.0 * t), self.f_s)
        peak = spectrogram.frequencies[np.argmax(spectrogram.power[0])]
        self.assertLessEqual(abs(peak - 2.0), spectrogram.frequencies[1])

    def test_parseval(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=500)
        spectrogram = stft_power(x, self.f_s)
        from scipy.signal import get_window
        taper = get_window("hann", 100)
        for i, start in enumerate(range(0, 401, 50)):
            energy = np.sum((x[start:start + 100] * taper) ** 2)
            self.assertAlmostEqual(spectrogram.power[i].sum() / energy, 1.0, delta=0.01)

    def test_tone_stands_out_of_noise(self):
        rng = np.random.default_rng(11)
        t = np.arange(2000) / self.f_s
        amplitude = 1.0
        noise = rng.normal(scale=amplitude / math.sqrt(2) / math.sqrt(10), size=t.size)
        spectrogram = stft_power(amplitude * np.sin(2 * np.pi * 3.0 * t) + noise, self.f_s)
        tone_bin = int(np.argmin(np.abs(spectrogram.frequencies - 3.0)))
        far = np.abs(spectrogram.frequencies - 3.0) > 1.0
        floor = np.median(spectrogram.power[:, far])
        peak = np.median(spectrogram.power[:, tone_bin])
        self.assertGreater(10 * np.log10(peak / floor), 10.0)

    def test_shift_invariance_for_periodic_signal(self):
        t = np.arange(600) / self.f_s
        x = np.sin(2 * np.pi * 2.0 * t) + 0.3 * np.sin(2 * np.pi * 5.0 * t)
        base = stft_power(x[:400], self.f_s).power
        shifted = stft_power(x[10:410], self.f_s).power  # 0.5 s shift, whole periods
        np.testing.assert_allclose(shifted.sum(axis=1), base.sum(axis=1), rtol=0.01)

    def test_short_signal(self):
        with self.assertRaises(EmptySpectrogramError):
            stft_power(np.zeros(50), self.f_s)


class SamplingTests(SimpleTestCase):
    def test_uniform_range(self):
        stream = SeedStream(5)
        values = [sample_distribution(Uniform(0.5, 1.17), stream) for _ in range(1000)]
        self.assertGreaterEqual(min(values), 0.5)
        self.assertLessEqual(max(values), 1.17)

    def test_normal_mean(self):
        stream = SeedStream(17)
        values = np.array([sample_distribution(Normal(1372.0, 137.2), stream) for _ in range(100_000)])
        self.assertLess(abs(values.mean() - 1372.0) / 1372.0, 0.01)

    def test_same_seed_same_sequence(self):
        first, second = SeedStream(9, 3), SeedStream(9, 3)
        kind = Normal(0.0, 1.0)
        self.assertEqual(
            [sample_distribution(kind, first) for _ in range(20)],
            [sample_distribution(kind, second) for _ in range(20)],
        )

    def test_draw_indices_are_independent_streams(self):
        self.assertNotEqual(SeedStream(9, 0).uniform(), SeedStream(9, 1).uniform())

    def test_invalid_parameters(self):
        with self.assertRaises(ConfigurationError):
            Normal(0.0, -1.0)
        with self.assertRaises(ConfigurationError):
            Uniform(2.0, 1.0)

    def test_degenerate_distributions(self):
        stream = SeedStream(1)
        self.assertEqual(Normal(1.0, 0.0).sample(stream), 1.0)
        self.assertEqual(Uniform(1.0, 1.0).sample(stream), 1.0)


class BoxRateQPTests(SimpleTestCase):
    def test_unconstrained_matches_least_squares(self):
        rng = np.random.default_rng(0)
        G = rng.normal(size=(8, 3))
        target = rng.normal(size=8)
        H = G.T @ G
        g = -G.T @ target
        result = solve_box_rate_qp(H, g, amplitude=np.inf)
        expected = np.linalg.lstsq(G, target, rcond=None)[0]
        np.testing.assert_allclose(result.solution, expected, atol=1e-9)
        self.assertTrue(result.converged)

    def test_amplitude_bound_active(self):
        result = solve_box_rate_qp(np.eye(2), np.array([-5.0, 0.0]), amplitude=1.0)
        np.testing.assert_allclose(result.solution, [1.0, 0.0], atol=1e-12)
        self.assertTrue(result.converged)

    def test_rate_bound_active(self):
        result = solve_box_rate_qp(np.eye(3), np.full(3, -1.0), previous=0.0, rate=0.1)
        np.testing.assert_allclose(result.solution, [0.1, 0.2, 0.3], atol=1e-12)
        self.assertTrue(result.converged)

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(-1, 1), st.floats(0.01, 0.5))
    @settings(max_examples=100, deadline=None)
    def test_projection_is_feasible(self, values, previous, rate):
        z = project_feasible(values, previous, 1.0, rate)
        self.assertTrue(np.all(np.abs(z) <= 1.0 + 1e-12))
        self.assertTrue(np.all(np.abs(np.diff(np.concatenate([[previous], z]))) <= rate + 1e-12))

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_capped_solution_is_feasible(self, seed):
        rng = np.random.default_rng(seed)
        G = rng.normal(size=(6, 4))
        H = G.T @ G + 0.1 * np.eye(4)
        g = rng.normal(scale=5.0, size=4)
        previous = rng.uniform(-1, 1)
        result = solve_box_rate_qp(H, g, previous=previous, rate=0.2, max_iter=3)
        z = result.solution
        self.assertTrue(np.all(np.abs(z) <= 1.0 + 1e-9))
        self.assertTrue(np.all(np.abs(np.diff(np.concatenate([[previous], z]))) <= 0.2 + 1e-9))

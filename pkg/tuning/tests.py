import math
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, tag
from hypothesis import given, settings, strategies as st

from controllers.services.config import FAMILIES
from controllers.services.setups import bundled_setups
from lateralbench.exceptions import ConfigurationError, SelectionError
from lateralbench.options import SimulationOptions
from numerics.services.sampling import Uniform
from tuning.forms import load_campaign_config
from tuning.services.archive import (
    ArchiveEntry,
    Objectives,
    ParetoArchive,
    dominates,
    weakly_dominates,
    workzone_filter,
)
from tuning.services.campaign import CampaignConfig, selected_configs
from tuning.services.evaluation import candidate_config, default_space, evaluate_candidate
from tuning.services.robustness import RobustnessDistributions, monte_carlo_robustness
from tuning.services.search import FULL_SCALE_BUDGET, Parameter, ParameterSpace, pareto_search
from tuning.services.selection import group_size, select_setups
from vehicle.services.params import VehicleParams

OPTIONS = SimulationOptions(plant_step=0.005)


class TwoSpheres:
    """f1 = |p - a|^2, f2 = |p - b|^2; the front is the image of the segment [a, b]."""

    a = np.array([0.2, 0.2])
    b = np.array([0.8, 0.8])

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return Objectives(float(np.sum((p - self.a) ** 2)), float(np.sum((p - self.b) ** 2)), 0.0)


SQUARE = ParameterSpace((Parameter("x", 0.0, 1.0), Parameter("y", 0.0, 1.0)))


def _archive(vectors, names=("p",)):
    archive = ParetoArchive(names)
    for index, vector in enumerate(vectors):
        archive.insert(ArchiveEntry(index, (float(index),), Objectives(*vector)))
    return archive


def _assert_nondominated(test, archive):
    vectors = [entry.objectives for entry in archive]
    for a in vectors:
        for b in vectors:
            test.assertFalse(dominates(a, b))


objective_vectors = st.lists(
    st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)), min_size=0, max_size=60
)


class ArchiveTests(SimpleTestCase):
    def test_dominance(self):
        self.assertTrue(dominates((0.1, 0.2, 0.3), (0.1, 0.3, 0.3)))
        self.assertFalse(dominates((0.1, 0.2, 0.3), (0.1, 0.2, 0.3)))
        self.assertFalse(dominates((0.1, 0.4, 0.3), (0.2, 0.3, 0.3)))

    @given(objective_vectors)
    def test_no_dominated_pairs(self, vectors):
        archive = _archive(vectors)
        _assert_nondominated(self, archive)
        for vector in vectors:
            self.assertTrue(any(weakly_dominates(entry.objectives, vector) for entry in archive))

    def test_failed_candidates_are_rejected(self):
        archive = _archive([(math.inf, 0.1, 0.1), Objectives.failed()])
        self.assertEqual(len(archive), 0)

    def test_equal_objectives_are_kept(self):
        self.assertEqual(len(_archive([(0.1, 0.1, 0.1)] * 3)), 3)

    def test_frame_round_trip(self):
        archive = _archive([(0.1, 0.2, 0.3), (0.2, 0.1, 0.3)])
        archive.replace_entry(archive.get(1).with_robustness(95.0))
        restored = ParetoArchive.from_frame(archive.to_frame())
        self.assertEqual(restored.entries, archive.entries)
        self.assertEqual(restored.names, ("p",))

    def test_wrong_parameter_count(self):
        with self.assertRaises(ConfigurationError):
            ParetoArchive(("a", "b")).insert(ArchiveEntry(0, (1.0,), Objectives(0.1, 0.1, 0.1)))


class WorkZoneTests(SimpleTestCase):
    def test_limits(self):
        archive = _archive([(0.36, 0.1, 0.1), (0.3, 0.25, 0.7)])
        kept = workzone_filter(archive)
        self.assertEqual([entry.index for entry in kept], [1])

    def test_empty(self):
        self.assertEqual(len(workzone_filter(ParetoArchive(("p",)))), 0)

    @given(st.lists(st.tuples(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 1)), max_size=30))
    def test_idempotent(self, vectors):
        once = workzone_filter(_archive(vectors))
        self.assertEqual(workzone_filter(once).entries, once.entries)


class ParetoSearchTests(SimpleTestCase):
    def test_two_sphere_front(self):
        archive = pareto_search(SQUARE, TwoSpheres(), budget=500, seed=1)
        _assert_nondominated(self, archive)
        self.assertGreaterEqual(len(archive), 5)
        scale = 0.72
        t = np.linspace(0.0, 1.0, 4001)
        front = np.column_stack([t ** 2 * scale, (1 - t) ** 2 * scale])
        for entry in archive:
            distance = np.min(np.hypot(front[:, 0] - entry.objectives[0], front[:, 1] - entry.objectives[1]))
            self.assertLessEqual(distance / scale, 0.05, entry)

    def test_larger_budget_covers_smaller(self):
        small = pareto_search(SQUARE, TwoSpheres(), budget=50, seed=4)
        large = pareto_search(SQUARE, TwoSpheres(), budget=500, seed=4)
        self.assertLessEqual(small.evaluations, 50)
        for entry in small:
            self.assertTrue(any(weakly_dominates(kept.objectives, entry.objectives) for kept in large))

    def test_deterministic_per_seed(self):
        first = pareto_search(SQUARE, TwoSpheres(), budget=80, seed=2)
        second = pareto_search(SQUARE, TwoSpheres(), budget=80, seed=2)
        pd.testing.assert_frame_equal(first.to_frame(), second.to_frame())

    def test_parallel_matches_serial(self):
        serial = pareto_search(SQUARE, TwoSpheres(), budget=60, seed=5)
        parallel = pareto_search(SQUARE, TwoSpheres(), budget=60, seed=5, jobs=2)
        pd.testing.assert_frame_equal(serial.to_frame(), parallel.to_frame())

    def test_resume_from_checkpoint(self):
        uninterrupted = pareto_search(SQUARE, TwoSpheres(), budget=150, seed=3)
        with tempfile.TemporaryDirectory() as directory:
            checkpoint = Path(directory) / "search.json"
            partial = pareto_search(SQUARE, TwoSpheres(), budget=150, seed=3, checkpoint=checkpoint, stop_after=60)
            self.assertLess(partial.evaluations, 150)
            self.assertTrue(checkpoint.exists())
            resumed = pareto_search(SQUARE, TwoSpheres(), budget=150, seed=3, checkpoint=checkpoint)
        pd.testing.assert_frame_equal(resumed.to_frame(), uninterrupted.to_frame())
        self.assertEqual(resumed.evaluations, uninterrupted.evaluations)

    def test_checkpoint_of_another_campaign(self):
        with tempfile.TemporaryDirectory() as directory:
            checkpoint = Path(directory) / "search.json"
            pareto_search(SQUARE, TwoSpheres(), budget=60, seed=3, checkpoint=checkpoint, stop_after=10)
            with self.assertRaises(ConfigurationError):
                pareto_search(SQUARE, TwoSpheres(), budget=60, seed=4, checkpoint=checkpoint)

    def test_rejections(self):
        with self.assertRaises(ConfigurationError):
            pareto_search(SQUARE, TwoSpheres(), budget=49)
        with self.assertRaises(ConfigurationError):
            ParameterSpace(())
        with self.assertRaises(ConfigurationError):
            Parameter("x", 1.0, 1.0)


class CandidateConfigTests(SimpleTestCase):
    def test_bundled_setups_lie_in_default_spaces(self):
        for kind, setups in bundled_setups().items():
            space = default_space(kind)
            for setup in setups:
                values = {**asdict(setup.params), "t_p": setup.preview.t_p}
                point = [values[name] for name in space.names]
                self.assertTrue(space.contains(point), setup.label)

    def test_round_trip_of_bundled_values(self):
        setup = bundled_setups()["samfc"][1]
        space = default_space("samfc")
        values = {**asdict(setup.params), "t_p": setup.preview.t_p}
        config = candidate_config("samfc", space, [values[name] for name in space.names])
        self.assertEqual(config.params, setup.params)
        self.assertEqual(config.preview, setup.preview)

    def test_integer_horizons(self):
        space = default_space("nlmpc")
        config = candidate_config("nlmpc", space, [10.6, 12.2, 20.0, 0.1])
        self.assertEqual((config.params.h_p, config.params.h_c), (11, 11))

    def test_every_family_has_a_space(self):
        for kind in FAMILIES:
            self.assertGreater(len(default_space(kind)), 0)


def _entry(index, vector, robustness=None):
    return ArchiveEntry(index, (float(index),), Objectives(*vector), robustness=robustness)


class SelectionTests(SimpleTestCase):
    def test_three_points(self):
        archive = ParetoArchive(("p",), [_entry(0, (0.1, 0.2, 0.1)), _entry(1, (0.2, 0.1, 0.2)),
                                         _entry(2, (0.3, 0.05, 0.3))])
        selection = select_setups(archive, min_robustness=None)
        self.assertEqual([e.index for e in selection], [0, 1, 2])

    def test_identical_cluster(self):
        archive = ParetoArchive(("p",), [_entry(i, (0.2, 0.1, 0.3), 95.0) for i in range(4)])
        self.assertEqual([e.index for e in select_setups(archive)], [0, 0, 0])

    def test_robustness_gate(self):
        archive = ParetoArchive(("p",), [_entry(0, (0.1, 0.2, 0.1), 95.0), _entry(1, (0.2, 0.1, 0.2), 80.0),
                                         _entry(2, (0.3, 0.05, 0.3), 91.0)])
        setup1, setup2, setup3 = select_setups(archive)
        self.assertEqual((setup1.index, setup3.index), (0, 2))
        self.assertIn(setup2.index, (0, 2))
        archive.replace_entry(archive.get(2).with_robustness(50.0))
        with self.assertRaises(SelectionError):
            select_setups(archive)

    def test_group_size(self):
        self.assertEqual([group_size(n) for n in (2, 3, 9, 30)], [1, 1, 3, 5])

    @given(st.lists(st.tuples(st.floats(0, 0.35), st.floats(0, 0.25), st.floats(0, 0.7)), min_size=2, max_size=40))
    def test_accuracy_ordering(self, vectors):
        archive = ParetoArchive(("p",), [_entry(i, v) for i, v in enumerate(vectors)])
        if len(archive) < 2:
            return
        setup1, setup2, setup3 = select_setups(archive, min_robustness=None)
        self.assertLessEqual(setup1.objectives.iae, setup2.objectives.iae)
        self.assertLessEqual(setup2.objectives.iae, setup3.objectives.iae)

    def test_selected_configs(self):
        campaign = CampaignConfig("pid", budget=60)
        space = campaign.space
        entry = ArchiveEntry(7, tuple(space.center), Objectives(0.1, 0.1, 0.1))
        configs = selected_configs(campaign, (entry, entry, entry))
        self.assertEqual(list(configs), ["pid-1", "pid-2", "pid-3"])
        self.assertEqual(configs["pid-2"].name, "PID-2")
        self.assertIn("candidate 7", configs["pid-3"].notes)


class RobustnessDrawTests(SimpleTestCase):
    def test_nominal_draws(self):
        plant = RobustnessDistributions.nominal().draw(0, 5)
        self.assertEqual(plant, VehicleParams())

    def test_draws_depend_on_seed_and_index_only(self):
        distributions = RobustnessDistributions()
        self.assertEqual(distributions.draw(3, 7), distributions.draw(3, 7))
        self.assertNotEqual(distributions.draw(3, 7), distributions.draw(3, 8))

    @given(st.integers(0, 1000), st.integers(0, 1000))
    @settings(max_examples=50)
    def test_draws_are_physical(self, seed, index):
        plant = RobustnessDistributions().draw(seed, index)
        self.assertGreater(plant.m, 0)
        self.assertGreater(plant.a3, 0)
        self.assertTrue(0.5 <= plant.mu <= 1.17)


class CampaignFormTests(SimpleTestCase):
    def test_defaults(self):
        campaign = load_campaign_config({"family": "pid"})
        self.assertEqual(campaign.trajectories, ("T1", "T5", "T6"))
        self.assertEqual(campaign.space, default_space("pid"))

    def test_bounds_override(self):
        campaign = load_campaign_config({"family": "pid", "budget": 100, "seed": 9,
                                         "bounds": {"K_i": {"lower": 0.0, "upper": 0.1}}})
        bounds = dict(zip(campaign.space.names, zip(campaign.space.lower, campaign.space.upper)))
        self.assertEqual(bounds["K_i"], (0.0, 0.1))
        self.assertEqual(campaign.seed, 9)

    def test_rejections(self):
        bad = [
            {"family": "fuzzy"},
            {"family": "pid", "budget": 10},
            {"family": "pid", "trajectories": ["T9"]},
            {"family": "pid", "bounds": {"alpha": {"lower": 1, "upper": 2}}},
            {"family": "pid", "bounds": {"K_p": {"lower": 2, "upper": 1}}},
            {"family": "pid", "colour": "red"},
        ]
        for data in bad:
            with self.assertRaises(ConfigurationError):
                load_campaign_config(data)

    def test_hash_and_full_scale(self):
        campaign = CampaignConfig("lqr")
        self.assertEqual(campaign.config_hash, CampaignConfig("lqr").config_hash)
        self.assertNotEqual(campaign.config_hash, CampaignConfig("lqr", seed=1).config_hash)
        self.assertEqual(campaign.full_scale().budget, FULL_SCALE_BUDGET)


@tag("slow")
class SimulatedEvaluationTests(SimpleTestCase):
    def test_candidate_is_deterministic(self):
        config = bundled_setups()["pid"][0]
        first = evaluate_candidate(config, ("T1",), options=OPTIONS)
        second = evaluate_candidate(config, ("T1",), options=OPTIONS)
        self.assertEqual(first, second)
        self.assertTrue(first.finite)

    def test_failed_run_fails_candidate(self):
        config = bundled_setups()["pid"][0]
        result = evaluate_candidate(config, ("T3", "T1"), options=OPTIONS.with_changes(max_lateral_error=1e-9))
        self.assertEqual(result, Objectives.failed())

    def test_nominal_robustness(self):
        config = bundled_setups()["lqr"][0]
        result = monte_carlo_robustness(config, n=2, seed=0, distributions=RobustnessDistributions.nominal(),
                                        trajectory="T1", options=OPTIONS)
        self.assertEqual(result.success_pct, 100.0)

    def test_plants_without_grip_leave_the_path(self):
        # 0.05 * g of lateral grip is half what the curves of T1 ask for
        config = bundled_setups()["lqr"][0]
        icy = RobustnessDistributions(mu=Uniform(0.05, 0.05))
        starved = monte_carlo_robustness(config, n=2, seed=0, distributions=icy, trajectory="T1", options=OPTIONS)
        nominal = monte_carlo_robustness(config, n=2, seed=0, distributions=RobustnessDistributions.nominal(),
                                         trajectory="T1", options=OPTIONS)
        self.assertEqual(starved.success_pct, 0.0)
        self.assertNotIn("completed", starved.outcomes)
        self.assertGreater(nominal.success_pct, starved.success_pct)

    def test_robustness_is_reproducible_and_monotone_in_threshold(self):
        config = bundled_setups()["pid"][0]
        strict = monte_carlo_robustness(config, n=3, seed=11, trajectory="T1", threshold=0.3, options=OPTIONS)
        again = monte_carlo_robustness(config, n=3, seed=11, trajectory="T1", threshold=0.3, options=OPTIONS)
        loose = monte_carlo_robustness(config, n=3, seed=11, trajectory="T1", threshold=3.0, options=OPTIONS)
        self.assertEqual(strict, again)
        self.assertGreaterEqual(loose.success_pct, strict.success_pct)

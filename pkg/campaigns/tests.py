import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings, tag

from campaigns.models import CampaignManifest
from campaigns.services import plots
from campaigns.services.artifacts import Provenance, config_hash, read_csv, write_csv, write_json
from campaigns.services.ledger import record_manifest
from campaigns.services.table4 import RunOutcome, best_setups, build_table, metric_columns, summary
from controllers.forms import load_controller_config
from controllers.services.config import FAMILIES, LABELS
from controllers.services.setups import SETUP_DIR
from lateralbench.exceptions import EmptyPlotError
from metrics.services.report import METRIC_COLUMNS, MetricsReport
from trajectory.services.io import write_suite
from trajectory.services.paths import Straight, build_path
from trajectory.services.speed_profile import DrivingLimits, Trajectory
from tuning.services.archive import ArchiveEntry, Objectives, ParetoArchive
from tuning.services.evaluation import default_space

BENCH_SETTINGS = {"PLANT_STEP": 0.005, "JOBS": 1, "SEED": 0}
PROVENANCE = Provenance(seed=4, config_hash="abc123")


def _report(iae, m_epsilon=0.05, m_zeta=0.1):
    return MetricsReport(iae=iae, iae_raw=10 * iae, mle=3 * iae, m_epsilon=m_epsilon, m_zeta=m_zeta)


def _outcomes(trajectories=("T1", "T2", "T3")):
    outcomes = []
    for f, kind in enumerate(FAMILIES):
        for n in (1, 2, 3):
            for t, name in enumerate(trajectories):
                iae = 0.05 + 0.01 * n + 0.001 * f + 0.002 * t
                outcomes.append(RunOutcome(f"{LABELS[kind]}-{n}", kind, name, _report(iae)))
    return outcomes


def _run(command, *args, **kwargs):
    return call_command(command, *args, stdout=StringIO(), stderr=StringIO(), **kwargs)


class ArtifactTests(SimpleTestCase):
    def test_provenance_line(self):
        header = PROVENANCE.header()
        self.assertTrue(header.startswith("# version="))
        self.assertEqual(Provenance.parse(header), PROVENANCE)

    def test_csv_keeps_provenance_and_table(self):
        frame = pd.DataFrame({"a": [1.0, 2.5], "b": ["x", "y"]})
        with tempfile.TemporaryDirectory() as tmp:
            target = write_csv(frame, Path(tmp) / "nested" / "t.csv", PROVENANCE)
            loaded, provenance = read_csv(target)
        self.assertEqual(provenance, PROVENANCE)
        pd.testing.assert_frame_equal(loaded, frame)

    def test_json_embeds_provenance(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = write_json({"value": np.float64(0.5)}, Path(tmp) / "r.json", PROVENANCE)
            data = json.loads(target.read_text())
        self.assertEqual(data["value"], 0.5)
        self.assertEqual(data["provenance"]["seed"], 4)

    def test_config_hash(self):
        self.assertEqual(config_hash({"a": 1, "b": 2}), config_hash({"b": 2, "a": 1}))
        self.assertNotEqual(config_hash({"a": 1}), config_hash({"a": 2}))
        self.assertEqual(len(config_hash("x")), 64)


class Table4Tests(SimpleTestCase):
    def test_row_structure(self):
        table = build_table(_outcomes())
        self.assertEqual(len(table), 20)
        self.assertEqual((table["row"] == "setup").sum(), 15)
        self.assertEqual(table["setup"].tolist()[:5], ["LQR-1", "LQR-2", "LQR-3", "LQR mean", "MFC-1"])
        self.assertEqual(table.columns.tolist()[3:7], ["T1_iae", "T1_mle", "T1_m_epsilon", "T1_m_zeta"])
        self.assertIn("mean_m_zeta", table.columns)

    def test_mean_rows_are_arithmetic_means(self):
        table = build_table(_outcomes())
        columns = metric_columns(("T1", "T2", "T3"))
        for position in np.flatnonzero(table["row"].to_numpy() == "mean"):
            block = table.iloc[position - 3:position]
            for column in columns:
                self.assertAlmostEqual(table.iloc[position][column], block[column].mean(), delta=1e-9)

    def test_mean_column(self):
        row = build_table(_outcomes()).iloc[0]
        for metric in METRIC_COLUMNS:
            expected = np.mean([row[f"{name}_{metric}"] for name in ("T1", "T2", "T3")])
            self.assertAlmostEqual(row[f"mean_{metric}"], expected, delta=1e-12)

    def test_crashed_run_is_marked(self):
        outcomes = _outcomes()
        position = next(i for i, o in enumerate(outcomes) if o.setup == "PID-2" and o.trajectory == "T2")
        outcomes[position] = RunOutcome("PID-2", "pid", "T2", error="solver failed")
        table = build_table(outcomes).set_index("setup")
        self.assertEqual(table.loc["PID-2", "status"], "error@T2")
        self.assertTrue(math.isnan(table.loc["PID-2", "T2_iae"]))
        self.assertEqual(table.loc["PID mean", "status"], "incomplete")
        self.assertEqual(table.loc["PID-1", "status"], "ok")
        self.assertEqual(len(table), 20)

    def test_work_zone_flags(self):
        outcomes = _outcomes()
        outcomes[-1] = RunOutcome("NLMPC-3", "nlmpc", "T3", _report(0.5, m_zeta=0.9))
        table = build_table(outcomes).set_index("setup")
        self.assertEqual(table.loc["NLMPC-3", "flags"], "iae>0.35@T3;m_zeta>0.7@T3")
        self.assertEqual(table.loc["NLMPC-3", "status"], "ok")

    def test_summary_and_best_setups(self):
        table = build_table(_outcomes())
        best = summary(table)
        self.assertEqual(best["best"]["T1"]["iae"]["setup"], "LQR-1")
        self.assertAlmostEqual(best["best"]["T1"]["iae"]["value"], 0.06)
        self.assertEqual(best_setups(table), {kind: f"{LABELS[kind]}-1" for kind in FAMILIES})
        self.assertEqual(best["failed"], [])

    def test_missing_spectral_value_stays_empty(self):
        outcomes = [RunOutcome("PID-1", "pid", "T1", _report(0.1, m_epsilon=None))]
        table = build_table(outcomes, ("T1",))
        self.assertTrue(math.isnan(table.iloc[0]["T1_m_epsilon"]))
        self.assertIsNone(summary(table, ("T1",))["best"]["T1"]["m_epsilon"])


class PlotTests(SimpleTestCase):
    def tearDown(self):
        plt.close("all")

    def test_box_quartiles_match_percentiles(self):
        values = np.random.default_rng(3).normal(size=501)
        stats = plots.box_statistics({"a": values})[0]
        q1, median, q3 = np.percentile(values, [25, 50, 75])
        self.assertAlmostEqual(stats["q1"], q1, delta=1e-9)
        self.assertAlmostEqual(stats["med"], median, delta=1e-9)
        self.assertAlmostEqual(stats["q3"], q3, delta=1e-9)

    def test_spider_polygons_are_closed(self):
        values = {f"S{i}": {"iae": 0.1 * i, "m_epsilon": 0.02 * i, "m_zeta": None} for i in range(1, 6)}
        figure = plots.spider(values)
        lines = figure.axes[0].get_lines()
        self.assertEqual(len(lines), 5)
        for line in lines:
            x, y = line.get_xdata(), line.get_ydata()
            self.assertEqual(len(x), 4)
            self.assertEqual(x[0], x[-1])
            self.assertEqual(y[0], y[-1])

    def test_pareto_shows_archive_points_only(self):
        archive = ParetoArchive(("p",))
        for index, vector in enumerate([(0.1, 0.2, 0.3), (0.2, 0.1, 0.3), (0.3, 0.3, 0.4)]):
            archive.insert(ArchiveEntry(index, (0.0,), Objectives(*vector)))
        figure = plots.pareto_projections(archive)
        for ax in figure.axes[:3]:
            self.assertEqual(len(ax.collections[0].get_offsets()), 2)

    def test_robustness_colours_add_a_colorbar(self):
        archive = ParetoArchive(("p",), [ArchiveEntry(0, (0.0,), Objectives(0.1, 0.1, 0.1), robustness=96.0)])
        self.assertEqual(len(plots.pareto_projections(archive).axes), 4)

    def test_curvature_groups(self):
        kappa = np.array([-0.02, -0.01, 0.0, 0.01, 0.02])
        e_y = np.arange(5.0)
        groups = plots.curvature_groups(kappa, e_y, np.linspace(-0.02, 0.02, 3))
        self.assertEqual([centre for centre, _ in groups], [-0.01, 0.01])
        np.testing.assert_array_equal(groups[0][1], [0.0, 1.0])
        np.testing.assert_array_equal(groups[1][1], [2.0, 3.0, 4.0])

    def test_error_vs_curvature_has_a_panel_per_run(self):
        kappa = np.linspace(-0.02, 0.02, 50)
        figure = plots.error_vs_curvature({"a": (kappa, 0.1 * kappa), "b": (kappa, -kappa)})
        self.assertEqual(len(figure.axes), 2)

    def test_time_series_draws_a_line_per_run(self):
        t = np.arange(100) * 0.05
        runs = {"LQR-1": (t, 0.1 * np.sin(t), 0.01 * np.cos(t)), "PID-1": (t, -0.1 * np.sin(t), np.zeros(100))}
        error_ax, action_ax = plots.time_series(runs).axes
        # the zero line is the extra line of the error panel
        self.assertEqual(len(error_ax.get_lines()), 3)
        self.assertEqual(len(action_ax.get_lines()), 2)
        np.testing.assert_array_equal(action_ax.get_lines()[0].get_xdata(), t)
        np.testing.assert_array_equal(action_ax.get_lines()[0].get_ydata(), 0.01 * np.cos(t))
        self.assertEqual([text.get_text() for text in error_ax.get_legend().get_texts()], ["LQR-1", "PID-1"])

    def test_empty_inputs(self):
        with self.assertRaises(EmptyPlotError):
            plots.pareto_projections(ParetoArchive(("p",)))
        with self.assertRaises(EmptyPlotError):
            plots.error_boxplot({"a": np.zeros(0)})
        with self.assertRaises(EmptyPlotError):
            plots.spider({})
        with self.assertRaises(EmptyPlotError):
            plots.runtime_boxplot({})
        with self.assertRaises(EmptyPlotError):
            plots.error_vs_curvature({"a": (np.zeros(0), np.zeros(0))})
        with self.assertRaises(EmptyPlotError):
            plots.time_series({"a": (np.zeros(0), np.zeros(0), np.zeros(0))})

    def test_svg_is_deterministic(self):
        values = {"A": {"iae": 0.1, "m_epsilon": 0.1, "m_zeta": 0.2}}
        with tempfile.TemporaryDirectory() as tmp:
            first = plots.save_svg(plots.spider(values), Path(tmp) / "a.svg", PROVENANCE)
            second = plots.save_svg(plots.spider(values), Path(tmp) / "b.svg", PROVENANCE)
            self.assertEqual(first.read_bytes(), second.read_bytes())
            self.assertIn("config_hash=abc123", first.read_text())


class LedgerTests(TestCase):
    def test_record(self):
        manifest = record_manifest("tune", ["c.json"], "/tmp/out", 3, 2, "f" * 64, wall_time=1.5)
        self.assertEqual(CampaignManifest.objects.get().config_paths, ["c.json"])
        self.assertEqual(manifest.version, "1.0.0")
        self.assertIn("tune", str(manifest))


def _short_suite(directory):
    trajectory = Trajectory.planned("short", build_path([Straight(40.0)]), DrivingLimits(30, 1.0, 1.0, 2.0))
    write_suite([trajectory], directory)
    return Path(directory) / "short.csv"


def _write_archive(path, vectors, robustness=95.0):
    space = default_space("pid")
    archive = ParetoArchive(space.names)
    for index, vector in enumerate(vectors):
        archive.insert(ArchiveEntry(index, tuple(space.center), Objectives(*vector), robustness=robustness))
    write_csv(archive.to_frame(), path, PROVENANCE)
    return path


@override_settings(LATERAL_BENCH=BENCH_SETTINGS)
class CommandTests(TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        plt.close("all")

    def assertExitCode(self, code, *args, **kwargs):
        with self.assertRaises(CommandError) as caught:
            _run(*args, **kwargs)
        self.assertEqual(caught.exception.returncode, code)
        return caught.exception

    def test_simulate_writes_log_runtimes_and_metrics(self):
        trajectory = _short_suite(self.tmp / "suite")
        controller = SETUP_DIR / "pid-1.json"
        for out in ("a", "b"):
            _run("simulate", "--trajectory", str(trajectory), "--controller", str(controller),
                 "--seed", "7", "--out", str(self.tmp / out))
        log = (self.tmp / "a" / "PID-1_short.csv").read_bytes()
        self.assertEqual(log, (self.tmp / "b" / "PID-1_short.csv").read_bytes())
        self.assertTrue(log.startswith(b"# version="))
        self.assertIn(b"seed=7", log.splitlines()[0])
        metrics = json.loads((self.tmp / "a" / "PID-1_short.metrics.json").read_text())
        self.assertEqual(metrics["provenance"]["seed"], 7)
        self.assertIn("iae", metrics)
        runtimes, _ = read_csv(self.tmp / "a" / "PID-1_short.runtime.csv")
        self.assertEqual(runtimes["controller"].unique().tolist(), ["PID-1"])
        self.assertEqual(CampaignManifest.objects.filter(command="simulate", status="completed").count(), 2)

    def test_missing_preview_is_a_config_error(self):
        data = json.loads((SETUP_DIR / "pid-1.json").read_text())
        del data["preview"]
        controller = self.tmp / "pid.json"
        controller.write_text(json.dumps(data))
        error = self.assertExitCode(2, "simulate", "--trajectory", "T1", "--controller", str(controller),
                                    "--out", str(self.tmp / "out"))
        self.assertIn("preview", str(error))
        self.assertTrue(CampaignManifest.objects.filter(command="simulate", status="failed").exists())

    def test_unknown_trajectory_and_bad_jobs(self):
        controller = str(SETUP_DIR / "pid-1.json")
        self.assertExitCode(2, "simulate", "--trajectory", "T9", "--controller", controller,
                            "--out", str(self.tmp))
        self.assertExitCode(2, "simulate", "--trajectory", "T1", "--controller", controller,
                            "--jobs", "0", "--out", str(self.tmp))

    def test_select_writes_three_loadable_configs(self):
        archive = _write_archive(self.tmp / "archive_robust.csv",
                                 [(0.1, 0.2, 0.1), (0.2, 0.1, 0.2), (0.3, 0.05, 0.3)])
        campaign = self.tmp / "campaign.json"
        campaign.write_text(json.dumps({"family": "pid", "seed": 2}))
        _run("select", "--campaign", str(campaign), "--archive", str(archive), "--out", str(self.tmp))

        selection = json.loads((self.tmp / "selection.json").read_text())
        self.assertEqual([setup["index"] for setup in selection["setups"]], [0, 1, 2])
        self.assertEqual(selection["provenance"]["seed"], 2)
        for n in (1, 2, 3):
            config = load_controller_config(self.tmp / "selected" / f"pid-{n}.json")
            self.assertEqual(config.label, f"PID-{n}")

    def test_select_respects_the_robustness_gate(self):
        archive = _write_archive(self.tmp / "archive_robust.csv", [(0.1, 0.2, 0.1), (0.2, 0.1, 0.2)], 50.0)
        campaign = self.tmp / "campaign.json"
        campaign.write_text(json.dumps({"family": "pid"}))
        self.assertExitCode(3, "select", "--campaign", str(campaign), "--out", str(self.tmp))
        _run("select", "--campaign", str(campaign), "--archive", str(archive), "--no-robustness-gate",
             "--out", str(self.tmp))
        self.assertTrue((self.tmp / "selected" / "pid-3.json").exists())

    def test_select_rejects_an_archive_of_another_family(self):
        archive = _write_archive(self.tmp / "archive_robust.csv", [(0.1, 0.2, 0.1), (0.2, 0.1, 0.2)])
        campaign = self.tmp / "campaign.json"
        campaign.write_text(json.dumps({"family": "lqr"}))
        self.assertExitCode(2, "select", "--campaign", str(campaign), "--archive", str(archive),
                            "--out", str(self.tmp))

    def test_tune_refuses_to_overwrite_a_checkpoint(self):
        campaign = self.tmp / "campaign.json"
        campaign.write_text(json.dumps({"family": "pid", "budget": 50}))
        (self.tmp / "tune-checkpoint.json").write_text("{}")
        error = self.assertExitCode(2, "tune", str(campaign), "--out", str(self.tmp))
        self.assertIn("--resume", str(error))

    def test_plot_kinds(self):
        _write_archive(self.tmp / "archive.csv", [(0.1, 0.2, 0.1), (0.2, 0.1, 0.2)])
        _run("plot", str(self.tmp / "archive.csv"), "--kind", "pareto3d-projections", "--out", str(self.tmp))
        self.assertIn("seed=", (self.tmp / "pareto3d-projections.svg").read_text())

        rng = np.random.default_rng(0)
        logs = []
        for label in ("LQR-1_T1", "PID-1_T1"):
            frame = pd.DataFrame({"t": np.arange(200) * 0.05, "kappa": np.linspace(-0.03, 0.03, 200),
                                  "e_y": rng.normal(0, 0.05, 200), "u_fb": rng.normal(0, 0.01, 200)})
            logs.append(str(write_csv(frame, self.tmp / f"{label}.csv", PROVENANCE)))
            write_json(_report(0.1).to_dict(), self.tmp / f"{label}.metrics.json", PROVENANCE)
        _run("plot", *logs, "--kind", "error-boxplot", "--out", str(self.tmp))
        _run("plot", *logs, "--kind", "error-vs-curvature", "--out", str(self.tmp))
        _run("plot", *logs, "--kind", "time-series", "--out", str(self.tmp))
        _run("plot", *(str(self.tmp / f"{label}.metrics.json") for label in ("LQR-1_T1", "PID-1_T1")),
             "--kind", "spider", "--out", str(self.tmp))
        for kind in ("error-boxplot", "error-vs-curvature", "time-series", "spider"):
            self.assertTrue((self.tmp / f"{kind}.svg").exists(), kind)

    def test_plot_of_an_empty_log(self):
        empty = write_csv(pd.DataFrame({"kappa": [], "e_y": []}), self.tmp / "empty.csv", PROVENANCE)
        self.assertExitCode(3, "plot", str(empty), "--kind", "error-boxplot", "--out", str(self.tmp))

    def test_time_series_needs_the_feedback_column(self):
        frame = pd.DataFrame({"t": [0.0, 0.05], "e_y": [0.0, 0.1]})
        log = write_csv(frame, self.tmp / "PID-1_T1.csv", PROVENANCE)
        error = self.assertExitCode(2, "plot", str(log), "--kind", "time-series", "--out", str(self.tmp))
        self.assertIn("u_fb", str(error))


@tag("slow")
@override_settings(LATERAL_BENCH=BENCH_SETTINGS)
class CommandRunTests(TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        plt.close("all")

    def test_simulate_nlmpc_on_t1(self):
        controller = str(SETUP_DIR / "nlmpc-1.json")
        for out in ("a", "b"):
            _run("simulate", "--trajectory", "T1", "--controller", controller, "--seed", "7",
                 "--out", str(self.tmp / out))
        metrics = json.loads((self.tmp / "a" / "NLMPC-1_T1.metrics.json").read_text())
        self.assertFalse(metrics["diverged"])
        for metric in METRIC_COLUMNS:
            self.assertIsNotNone(metrics[metric], metric)
        self.assertEqual((self.tmp / "a" / "NLMPC-1_T1.csv").read_bytes(),
                         (self.tmp / "b" / "NLMPC-1_T1.csv").read_bytes())

    def test_table4_for_one_family(self):
        _run("table4", "--families", "pid", "--trajectories", "T1", "--skip-high-speed", "--out", str(self.tmp))
        table, provenance = read_csv(self.tmp / "table4.csv")
        self.assertEqual(table["setup"].tolist(), ["PID-1", "PID-2", "PID-3", "PID mean"])
        self.assertEqual(provenance.seed, 0)
        mean = table.iloc[3]
        for column in metric_columns(("T1",)):
            self.assertAlmostEqual(mean[column], table.iloc[:3][column].mean(), delta=1e-9)
        summary_file = json.loads((self.tmp / "table4_summary.json").read_text())
        self.assertIn("PID", summary_file["best_per_family"]["pid"])

        runs = self.tmp / "runs"
        logs = sorted(str(path) for path in runs.glob("*_T1.csv"))
        self.assertEqual(len(logs), 3)
        _run("plot", *logs, "--kind", "error-boxplot", "--out", str(self.tmp))
        runtimes = sorted(str(path) for path in runs.glob("*.runtime.csv"))
        _run("plot", *runtimes, "--kind", "runtime-boxplot", "--out", str(self.tmp))
        self.assertTrue((self.tmp / "runtime-boxplot.svg").exists())

    def test_tune_resumes_to_the_same_archive(self):
        campaign = self.tmp / "campaign.json"
        campaign.write_text(json.dumps({
            "family": "pid", "budget": 50, "seed": 3, "trajectories": ["T1"],
            "bounds": {"K_p": {"lower": 0.12, "upper": 0.2}, "K_i": {"lower": 0.0, "upper": 0.01},
                       "K_d": {"lower": 0.02, "upper": 0.04}, "N_PID": {"lower": 6, "upper": 10},
                       "t_p": {"lower": 1.5, "upper": 2.0}},
        }))
        _run("tune", str(campaign), "--out", str(self.tmp / "whole"))
        _run("tune", str(campaign), "--stop-after", "20", "--out", str(self.tmp / "parts"))
        self.assertTrue((self.tmp / "parts" / "tune-checkpoint.json").exists())
        _run("tune", str(campaign), "--resume", "--out", str(self.tmp / "parts"))

        self.assertEqual((self.tmp / "whole" / "archive.csv").read_bytes(),
                         (self.tmp / "parts" / "archive.csv").read_bytes())
        summary_file = json.loads((self.tmp / "whole" / "tune-summary.json").read_text())
        self.assertLessEqual(summary_file["evaluations"], 50)
        self.assertGreaterEqual(summary_file["archive_size"], 1)
        self.assertTrue(CampaignManifest.objects.filter(command="tune", status="interrupted").exists())

    def test_robustness_of_one_controller_is_reproducible(self):
        controller = str(SETUP_DIR / "lqr-1.json")
        for out in ("a", "b"):
            _run("robustness", "--controller", controller, "--draws", "2", "--trajectory", "T1",
                 "--seed", "5", "--out", str(self.tmp / out))
        first = json.loads((self.tmp / "a" / "robustness.json").read_text())
        self.assertEqual(first["draws"], 2)
        self.assertEqual(len(first["outcomes"]), 2)
        self.assertEqual((self.tmp / "a" / "robustness.json").read_bytes(),
                         (self.tmp / "b" / "robustness.json").read_bytes())

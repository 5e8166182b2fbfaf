import time
from pathlib import Path

from campaigns.management.commands._common import BenchCommand
from campaigns.services.artifacts import config_hash, read_csv, write_csv, write_json
from controllers.forms import load_controller_config
from lateralbench.options import SimulationOptions
from trajectory.services.benchmark import SUITE
from tuning.forms import load_campaign_config
from tuning.services.campaign import campaign_archive
from tuning.services.robustness import (
    DEFAULT_DRAWS,
    ERROR_THRESHOLD,
    ROBUSTNESS_TRAJECTORY,
    annotate_robustness,
    monte_carlo_robustness,
)


class Command(BenchCommand):
    help = "Monte Carlo robustness of one controller or of every setup in a campaign archive."

    def add_command_arguments(self, parser):
        target = parser.add_mutually_exclusive_group(required=True)
        target.add_argument("--campaign", help="Campaign configuration JSON; annotates its archive")
        target.add_argument("--controller", help="Controller configuration JSON")
        parser.add_argument("--archive", default=None, help="Archive CSV (default: <out>/archive.csv)")
        parser.add_argument("--draws", type=int, default=None)
        parser.add_argument("--trajectory", choices=list(SUITE), default=ROBUSTNESS_TRAJECTORY)
        parser.add_argument("--threshold", type=float, default=ERROR_THRESHOLD, help="Lateral error limit [m]")

    def run(self, invocation):
        if invocation.options["controller"]:
            self.screen_controller(invocation)
        else:
            self.annotate_campaign(invocation)

    def screen_controller(self, invocation):
        options = invocation.options
        config = load_controller_config(options["controller"])
        draws = options["draws"] if options["draws"] is not None else DEFAULT_DRAWS
        sim_options = SimulationOptions.from_settings()
        invocation.config_paths = [options["controller"]]
        invocation.config_hash = config_hash(config.to_dict(), draws, options["trajectory"], options["threshold"])

        result = monte_carlo_robustness(config, draws, invocation.seed, trajectory=options["trajectory"],
                                        threshold=options["threshold"], options=sim_options,
                                        jobs=invocation.jobs, progress=options["verbosity"] > 1)
        write_json({
            "controller": config.label,
            "trajectory": options["trajectory"],
            "threshold": options["threshold"],
            "draws": result.draws,
            "successes": result.successes,
            "success_pct": result.success_pct,
            "outcomes": list(result.outcomes),
        }, invocation.out / "robustness.json", invocation.provenance)
        self.done(f"{config.label}: {result.success_pct:.1f}% of {result.draws} draws succeeded")

    def annotate_campaign(self, invocation):
        options = invocation.options
        campaign = load_campaign_config(options["campaign"])
        if options["seed"] is None:
            invocation.seed = campaign.seed
        draws = options["draws"] if options["draws"] is not None else campaign.draws
        source = Path(options["archive"]) if options["archive"] else invocation.out / "archive.csv"
        frame, _ = read_csv(source)
        archive = campaign_archive(campaign, frame)
        invocation.config_paths = [options["campaign"], str(source)]
        invocation.config_hash = config_hash(campaign.to_dict(), draws, frame.to_dict(orient="list"))

        started = time.perf_counter()
        annotated = annotate_robustness(archive, campaign.family, campaign.space, draws, invocation.seed,
                                        invocation.jobs, SimulationOptions.from_settings())
        robust = sum(entry.robustness >= campaign.min_robustness for entry in annotated)

        write_csv(annotated.to_frame(), invocation.out / "archive_robust.csv", invocation.provenance)
        write_json({
            "command": "robustness",
            "family": campaign.family,
            "draws": draws,
            "archive_size": len(annotated),
            "robust_setups": robust,
            "min_robustness": campaign.min_robustness,
            "wall_time": round(time.perf_counter() - started, 3),
        }, invocation.out / "robustness-summary.json", invocation.provenance)
        self.done(f"{robust} of {len(annotated)} setups reach {campaign.min_robustness:g}% -> {invocation.out}")

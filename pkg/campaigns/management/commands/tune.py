import time
from dataclasses import replace

from campaigns.management.commands._common import BenchCommand
from campaigns.services.artifacts import write_csv, write_json
from lateralbench.exceptions import ConfigurationError
from lateralbench.options import SimulationOptions
from tuning.forms import load_campaign_config
from tuning.services.evaluation import CandidateEvaluator
from tuning.services.search import pareto_search

CHECKPOINT = "tune-checkpoint.json"


class Command(BenchCommand):
    help = "Search the Pareto front of a controller family (IAE, M_epsilon, M_zeta)."

    def add_command_arguments(self, parser):
        parser.add_argument("config", help="Campaign configuration JSON")
        parser.add_argument("--full-scale", action="store_true", help="Use the full campaign budget")
        parser.add_argument("--resume", action="store_true", help="Continue from the checkpoint in --out")
        parser.add_argument("--stop-after", type=int, default=None,
                            help="Stop (keeping the checkpoint) after this many evaluations")

    def run(self, invocation):
        options = invocation.options
        campaign = load_campaign_config(options["config"])
        if options["full_scale"]:
            campaign = campaign.full_scale()
        if options["seed"] is not None:
            campaign = replace(campaign, seed=invocation.seed)
        invocation.seed = campaign.seed
        invocation.config_paths = [options["config"]]
        invocation.config_hash = campaign.config_hash

        checkpoint = invocation.out / CHECKPOINT
        if checkpoint.exists() and not options["resume"]:
            raise ConfigurationError(f"{checkpoint} exists; pass --resume or choose another --out")

        space = campaign.space
        evaluator = CandidateEvaluator(campaign.family, space, campaign.trajectories,
                                       options=SimulationOptions.from_settings())
        started = time.perf_counter()
        archive = pareto_search(space, evaluator, campaign.budget, campaign.seed, invocation.jobs,
                                checkpoint=checkpoint, stop_after=options["stop_after"],
                                progress=options["verbosity"] > 1)
        wall_time = time.perf_counter() - started

        stopped = options["stop_after"] is not None and options["stop_after"] <= archive.evaluations < campaign.budget
        if stopped:
            invocation.status = "interrupted"

        provenance = invocation.provenance
        write_csv(archive.to_frame(), invocation.out / "archive.csv", provenance)
        write_json({
            "command": "tune",
            "family": campaign.family,
            "budget": campaign.budget,
            "evaluations": archive.evaluations,
            "archive_size": len(archive),
            "wall_time": round(wall_time, 3),
            "finished": not stopped,
            "campaign": campaign.to_dict(),
        }, invocation.out / "tune-summary.json", provenance)

        if stopped:
            self.stdout.write(self.style.WARNING(
                f"Stopped after {archive.evaluations} evaluations; rerun with --resume to continue"))
        else:
            checkpoint.unlink(missing_ok=True)
        self.done(f"{len(archive)} nondominated setups from {archive.evaluations} evaluations -> {invocation.out}")

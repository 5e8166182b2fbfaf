from dataclasses import asdict

from campaigns.management.commands._common import BenchCommand
from campaigns.management.commands.simulate import run_stem
from campaigns.services.artifacts import config_hash, write_csv, write_json
from campaigns.services.table4 import HIGH_SPEED_TRAJECTORY, TABLE_TRAJECTORIES, assemble_table4, summary
from controllers.services.config import FAMILIES
from controllers.services.setups import bundled_setups
from lateralbench.options import SimulationOptions
from trajectory.services.benchmark import SUITE


class Command(BenchCommand):
    help = "Run the bundled setups on the testing trajectories and write the results table."

    def add_command_arguments(self, parser):
        parser.add_argument("--families", nargs="+", choices=list(FAMILIES), default=list(FAMILIES))
        parser.add_argument("--trajectories", nargs="+", choices=list(SUITE), default=list(TABLE_TRAJECTORIES))
        parser.add_argument("--skip-high-speed", action="store_true",
                            help=f"Do not rerun the best setups on {HIGH_SPEED_TRAJECTORY}")

    def run(self, invocation):
        options = invocation.options
        sim_options = SimulationOptions.from_settings()
        setups = {kind: configs for kind, configs in bundled_setups().items() if kind in options["families"]}
        trajectories = tuple(options["trajectories"])
        high_speed = None if options["skip_high_speed"] else HIGH_SPEED_TRAJECTORY

        invocation.config_hash = config_hash(
            {kind: [config.to_dict() for config in configs] for kind, configs in setups.items()},
            trajectories, high_speed, asdict(sim_options),
        )
        result = assemble_table4(setups, trajectories, high_speed, sim_options, invocation.jobs,
                                 progress=options["verbosity"] > 1)

        out, provenance = invocation.out, invocation.provenance
        write_csv(result.table, out / "table4.csv", provenance)
        if high_speed:
            write_csv(result.high_speed, out / f"table4_{high_speed.lower()}.csv", provenance)
        write_csv(result.runs_frame(), out / "table4_runs.csv", provenance)
        write_json(summary(result.table, trajectories), out / "table4_summary.json", provenance)

        for outcome in result.outcomes:
            if outcome.log is None:
                continue
            runs, stem = out / "runs", run_stem(outcome.setup, outcome.trajectory)
            write_csv(outcome.log.frame, runs / f"{stem}.csv", provenance)
            write_csv(outcome.log.runtime_frame(), runs / f"{stem}.runtime.csv", provenance)
            outcome.report.write_json(runs / f"{stem}.metrics.json", provenance.to_dict())

        failed = (result.table["status"] != "ok").sum()
        if failed:
            self.stdout.write(self.style.WARNING(f"{failed} rows with failed runs"))
        self.done(f"Table with {len(result.table)} rows written to {out}")

from dataclasses import asdict

from campaigns.management.commands._common import BenchCommand
from campaigns.services.artifacts import config_hash, write_csv
from controllers.forms import load_controller_config
from controllers.services.runner import run_closed_loop
from lateralbench.options import SimulationOptions
from metrics.services.report import evaluate_log
from trajectory.services.io import load_trajectory
from vehicle.forms import load_vehicle_params
from vehicle.services.tires import LINEAR, MAGIC_FORMULA, TireModel


def run_stem(controller: str, trajectory: str) -> str:
    return f"{controller}_{trajectory}"


class Command(BenchCommand):
    help = "Run one controller on one trajectory; write the tick log, runtimes and metrics."

    def add_command_arguments(self, parser):
        parser.add_argument("--trajectory", required=True, help="Benchmark name (T1..T6) or trajectory CSV")
        parser.add_argument("--controller", required=True, help="Controller configuration JSON")
        parser.add_argument("--vehicle", default=None, help="Vehicle parameter JSON (default: nominal)")
        parser.add_argument("--tire", choices=[LINEAR, MAGIC_FORMULA], default=LINEAR)

    def run(self, invocation):
        options = invocation.options
        sim_options = SimulationOptions.from_settings()
        trajectory = load_trajectory(options["trajectory"], sim_options.path_step)
        config = load_controller_config(options["controller"])
        params = load_vehicle_params(options["vehicle"])

        invocation.config_paths = [p for p in (options["trajectory"], options["controller"], options["vehicle"]) if p]
        invocation.config_hash = config_hash(
            trajectory.name, config.to_dict(), asdict(params), options["tire"], asdict(sim_options)
        )

        log = run_closed_loop(trajectory, config, params, TireModel(options["tire"]), sim_options,
                              seed=invocation.seed)
        report = evaluate_log(log, trajectory)

        stem = run_stem(config.label, trajectory.name)
        provenance = invocation.provenance
        write_csv(log.frame, invocation.out / f"{stem}.csv", provenance)
        write_csv(log.runtime_frame(), invocation.out / f"{stem}.runtime.csv", provenance)
        report.write_json(invocation.out / f"{stem}.metrics.json", provenance.to_dict())

        if report.diverged:
            self.stdout.write(self.style.WARNING(f"{config.label} on {trajectory.name}: {report.status}"))
        self.done(f"{config.label} on {trajectory.name}: IAE {report.iae:.4f}, MLE {report.mle:.4f} "
                  f"({len(log)} ticks) -> {invocation.out}")

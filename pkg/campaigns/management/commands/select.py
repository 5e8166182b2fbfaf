from pathlib import Path

from campaigns.management.commands._common import BenchCommand
from campaigns.services.artifacts import config_hash, read_csv, write_json
from tuning.forms import load_campaign_config
from tuning.services.campaign import campaign_archive, selected_configs
from tuning.services.selection import select_setups


class Command(BenchCommand):
    help = "Pick three setups from a robustness-annotated archive and write their controller files."

    def add_command_arguments(self, parser):
        parser.add_argument("--campaign", required=True, help="Campaign configuration JSON")
        parser.add_argument("--archive", default=None, help="Archive CSV (default: <out>/archive_robust.csv)")
        gate = parser.add_mutually_exclusive_group()
        gate.add_argument("--min-robustness", type=float, default=None, help="Success percentage gate")
        gate.add_argument("--no-robustness-gate", action="store_true",
                          help="Select from archives without robustness data")

    def run(self, invocation):
        options = invocation.options
        campaign = load_campaign_config(options["campaign"])
        if options["seed"] is None:
            invocation.seed = campaign.seed
        source = Path(options["archive"]) if options["archive"] else invocation.out / "archive_robust.csv"
        frame, _ = read_csv(source)
        archive = campaign_archive(campaign, frame)

        if options["no_robustness_gate"]:
            gate = None
        elif options["min_robustness"] is not None:
            gate = options["min_robustness"]
        else:
            gate = campaign.min_robustness
        invocation.config_paths = [options["campaign"], str(source)]
        invocation.config_hash = config_hash(campaign.to_dict(), gate, frame.to_dict(orient="list"))

        selection = select_setups(archive, gate)
        provenance = invocation.provenance
        configs = selected_configs(campaign, selection)
        for stem, config in configs.items():
            write_json(config.to_dict(), invocation.out / "selected" / f"{stem}.json", provenance)
        write_json({
            "family": campaign.family,
            "min_robustness": gate,
            "setups": [
                {"name": config.label, "index": entry.index, "objectives": entry.objectives._asdict(),
                 "robustness": entry.robustness}
                for config, entry in zip(configs.values(), selection)
            ],
        }, invocation.out / "selection.json", provenance)
        self.done(f"Selected candidates {', '.join(str(entry.index) for entry in selection)} -> {invocation.out}")

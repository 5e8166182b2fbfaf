from pathlib import Path
from typing import Dict, List

import pandas as pd

from campaigns.management.commands._common import BenchCommand
from campaigns.services import plots
from campaigns.services.artifacts import config_hash, file_payload, read_csv, read_json
from lateralbench.exceptions import ConfigurationError
from tuning.services.archive import ParetoArchive


def input_label(path: Path) -> str:
    """``LQR-1_T1.metrics.json`` -> ``LQR-1_T1``."""
    return path.name.split(".", 1)[0]


def _columns(frame: pd.DataFrame, source: Path, required: List[str]) -> pd.DataFrame:
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ConfigurationError(f"{source} lacks columns: {', '.join(missing)}")
    return frame


class Command(BenchCommand):
    help = "Render logs, metrics, runtimes or an archive as SVG."

    def add_command_arguments(self, parser):
        parser.add_argument("inputs", nargs="+", help="Input files for the chosen kind")
        parser.add_argument("--kind", required=True, choices=plots.PLOT_KINDS)
        parser.add_argument("--name", default=None, help="Output file name (default: <kind>.svg)")
        parser.add_argument("--bins", type=int, default=plots.CURVATURE_BINS,
                            help="Curvature bins of error-vs-curvature")

    def run(self, invocation):
        options = invocation.options
        kind = options["kind"]
        sources = [Path(path) for path in options["inputs"]]
        invocation.config_paths = [str(path) for path in sources]
        invocation.config_hash = config_hash(kind, [file_payload(path) for path in sources])

        figure = self.build(kind, sources, options)
        target = invocation.out / (options["name"] or f"{kind}.svg")
        plots.save_svg(figure, target, invocation.provenance)
        self.done(f"Wrote {target}")

    def build(self, kind: str, sources: List[Path], options):
        if kind == plots.PARETO:
            if len(sources) != 1:
                raise ConfigurationError("pareto3d-projections takes exactly one archive CSV")
            frame, _ = read_csv(sources[0])
            return plots.pareto_projections(ParetoArchive.from_frame(frame))

        if kind == plots.SPIDER:
            values: Dict[str, dict] = {}
            for source in sources:
                report = read_json(source)
                values[input_label(source)] = {metric: report.get(metric) for metric in plots.SPIDER_METRICS}
            return plots.spider(values)

        if kind == plots.RUNTIME_BOXPLOT:
            frames = [_columns(read_csv(source)[0], source, ["controller", "runtime"]) for source in sources]
            runtimes = pd.concat(frames, ignore_index=True)
            groups = {str(label): group["runtime"].to_numpy(dtype=float)
                      for label, group in runtimes.groupby("controller", sort=False)}
            return plots.runtime_boxplot(groups)

        if kind == plots.TIME_SERIES:
            logs = {input_label(source): _columns(read_csv(source)[0], source, ["t", "e_y", "u_fb"])
                    for source in sources}
            return plots.time_series({
                label: (log["t"].to_numpy(dtype=float), log["e_y"].to_numpy(dtype=float),
                        log["u_fb"].to_numpy(dtype=float))
                for label, log in logs.items()
            })

        logs = {input_label(source): _columns(read_csv(source)[0], source, ["e_y", "kappa"]) for source in sources}
        if kind == plots.ERROR_BOXPLOT:
            return plots.error_boxplot({label: log["e_y"].to_numpy(dtype=float) for label, log in logs.items()})
        return plots.error_vs_curvature(
            {label: (log["kappa"].to_numpy(dtype=float), log["e_y"].to_numpy(dtype=float))
             for label, log in logs.items()},
            bins=max(1, options["bins"]),
        )

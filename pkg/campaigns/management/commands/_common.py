"""Shared plumbing of the benchmark commands: global flags, exit codes and the ledger."""

import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from campaigns.services.artifacts import Provenance
from campaigns.services.ledger import record_manifest
from lateralbench.exceptions import BenchError, ConfigurationError

logger = logging.getLogger(__name__)

CONFIG_ERROR = 2
RUNTIME_ERROR = 3


@dataclass
class Invocation:
    """What one command run needs and what it reports back to the ledger."""

    seed: int
    jobs: int
    out: Path
    options: Dict[str, Any]
    config_paths: List[str] = field(default_factory=list)
    config_hash: str = ""
    status: str = "completed"

    @property
    def provenance(self) -> Provenance:
        return Provenance(self.seed, self.config_hash)


class BenchCommand(BaseCommand):
    """Base for commands taking ``--seed``, ``--jobs`` and ``--out``.

    Subclasses implement ``add_command_arguments`` and ``run``.
    """

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, default=None, help="Random seed (default: LATERAL_BENCH SEED)")
        parser.add_argument("--jobs", type=int, default=None, help="Parallel simulations (default: all cores)")
        parser.add_argument("--out", default=".", help="Output directory")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def run(self, invocation: Invocation):
        raise NotImplementedError

    def handle(self, *args, **options):
        configured = getattr(settings, "LATERAL_BENCH", {})
        seed = options["seed"] if options["seed"] is not None else int(configured.get("SEED", 0))
        jobs = options["jobs"] if options["jobs"] is not None else int(configured.get("JOBS", 1))
        invocation = Invocation(seed, jobs, Path(options["out"]), options)
        started = time.perf_counter()
        try:
            self._check_output(invocation)
            self.run(invocation)
        except ConfigurationError as exc:
            invocation.status = "failed"
            raise CommandError(str(exc), returncode=CONFIG_ERROR) from exc
        except BenchError as exc:
            invocation.status = "failed"
            raise CommandError(str(exc), returncode=RUNTIME_ERROR) from exc
        except KeyboardInterrupt as exc:
            invocation.status = "interrupted"
            raise CommandError("Interrupted; partial results are in the output directory",
                               returncode=RUNTIME_ERROR) from exc
        finally:
            record_manifest(self.command_name, invocation.config_paths, str(invocation.out), invocation.seed,
                            invocation.jobs, invocation.config_hash, invocation.status,
                            time.perf_counter() - started)

    @property
    def command_name(self) -> str:
        return self.__class__.__module__.rsplit(".", 1)[-1]

    @staticmethod
    def _check_output(invocation: Invocation):
        if invocation.jobs < 1:
            raise ConfigurationError(f"--jobs must be at least 1, got {invocation.jobs}")
        try:
            invocation.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigurationError(f"Cannot create output directory {invocation.out}: {exc}") from exc
        if not os.access(invocation.out, os.W_OK):
            raise ConfigurationError(f"Output directory {invocation.out} is not writable")

    def done(self, message: str):
        self.stdout.write(self.style.SUCCESS(message))

import logging
from typing import Optional, Sequence

from django.db import DatabaseError

from campaigns.models import CampaignManifest
from lateralbench import __version__

logger = logging.getLogger(__name__)


def record_manifest(command: str, config_paths: Sequence[str], output_dir: str, seed: int, jobs: int,
                    config_hash: str = "", status: str = "completed",
                    wall_time: float = 0.0) -> Optional[CampaignManifest]:
    """Store one command invocation; a missing or broken database only costs a warning."""
    try:
        manifest = CampaignManifest.objects.create(
            command=command,
            config_paths=[str(path) for path in config_paths],
            output_dir=str(output_dir),
            seed=seed,
            jobs=jobs,
            config_hash=config_hash,
            version=__version__,
            status=status,
            wall_time=wall_time,
        )
    except DatabaseError as exc:
        logger.warning(f"Could not record {command} in the campaign ledger: {exc}")
        return None
    logger.debug(f"Recorded {manifest}")
    return manifest

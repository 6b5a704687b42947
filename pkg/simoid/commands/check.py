from typing import Optional, Sequence, Tuple
import logging

import numpy as np
from pydantic import ValidationError

from simoid.errors import CommandError, SimoidError
from simoid.models import ChannelVector, Verdict
from simoid.schemas import ExperimentConfig, IdentifiabilityReportDocument
from simoid.services.channel_model import gen_channel, load_channel
from simoid.services.identifiability import check_condition

logger = logging.getLogger(__name__)

VERDICT_EXIT_CODES = {
    Verdict.IDENTIFIABLE: 0,
    Verdict.BOUNDARY: 2,
    Verdict.NOT_IDENTIFIABLE: 3,
}


def seed_streams(seed: Optional[int]) -> Tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Independent (channel, samples) streams derived from one run seed"""
    channel_stream, sample_stream = np.random.SeedSequence(seed).spawn(2)
    return channel_stream, sample_stream


def resolve_channel(
    config: ExperimentConfig,
    channel_path: Optional[str],
    random_dims: Optional[Sequence[int]]
) -> ChannelVector:
    """Load the channel file, or draw a Gaussian channel from --random M L and the seed"""
    if channel_path and random_dims:
        raise CommandError(1, "use either --channel or --random, not both")
    if channel_path:
        try:
            return load_channel(channel_path)
        except OSError as e:
            raise CommandError(1, f"cannot read channel file '{channel_path}': {e}")
        except ValueError as e:
            # json and pydantic validation errors
            raise CommandError(1, f"malformed channel file '{channel_path}': {e}")
    if random_dims:
        M, L = random_dims
        logger.info(f"Drawing a random channel M={M}, L={L}, seed={config.seed}")
        return gen_channel(M, L, seed_streams(config.seed)[0])
    if config.M is not None and config.L is not None:
        return gen_channel(config.M, config.L, seed_streams(config.seed)[0])
    raise CommandError(1, "a channel is required: pass --channel PATH or --random M L")


def cmd_check(
    config: ExperimentConfig,
    channel_path: Optional[str] = None,
    random_dims: Optional[Sequence[int]] = None
) -> Tuple[int, IdentifiabilityReportDocument]:
    """
    Evaluate the identifiability condition for one channel

    Returns the exit code (0 identifiable, 2 boundary, 3 not identifiable)
    and the report document.
    """
    try:
        h = resolve_channel(config, channel_path, random_dims)
        Lp = config.Lp if config.Lp is not None else h.L + 1
        report = check_condition(h, Lp, config.p)
        logger.info(f"Channel M={h.M}, L={h.L}, Lp={Lp}, p={config.p}: margin {report.margin:.6g}")
        return VERDICT_EXIT_CODES[report.verdict], IdentifiabilityReportDocument.model_validate(report)
    except CommandError:
        raise
    except (SimoidError, ValidationError) as e:
        detail = e.detail if isinstance(e, SimoidError) else str(e)
        logger.error(f"check failed: {detail}")
        raise CommandError(1, detail)
    except Exception as e:
        logger.error(f"Unexpected error in check: {str(e)}")
        raise CommandError(1, f"Internal error: {str(e)}")

from dataclasses import replace
from typing import Optional, Sequence
import logging

from pydantic import ValidationError

from simoid.commands.check import resolve_channel, seed_streams
from simoid.errors import CommandError, SimoidError
from simoid.schemas import ExperimentConfig, RecoveryResultDocument
from simoid.services.identifiability import check_condition
from simoid.services.sparse_select import recover_from_kernel, recovery_success, solve_p1, solve_pp_local
from simoid.services.subspace import estimate_kernel

logger = logging.getLogger(__name__)


def cmd_recover(
    config: ExperimentConfig,
    channel_path: Optional[str] = None,
    random_dims: Optional[Sequence[int]] = None,
    pipeline: bool = False
) -> RecoveryResultDocument:
    """
    Recover the channel by sparse selection

    - analysis mode: solve over the known shift basis H of the true channel
    - pipeline mode: covariance -> noise projector -> kernel -> selection,
      scored by the shift-tolerant correlation with the true channel
    """
    try:
        h = resolve_channel(config, channel_path, random_dims)
        Lp = config.Lp if config.Lp is not None else h.L + 1
        if pipeline:
            # the kernel only needs Lp >= L; the condition is defined for 1 <= delta <= L
            verdict = check_condition(h, Lp, config.p).verdict if 1 <= Lp - h.L <= h.L else None
            n = config.n if config.n is not None else Lp
            K = estimate_kernel(h, Lp, n, config.sigma2, config.samples, seed_streams(config.seed)[1])
            result = recover_from_kernel(K, p=config.p)
            result = replace(result, correlation=recovery_success(result.f_hat, h, Lp))
        else:
            verdict = check_condition(h, Lp, config.p).verdict
            if config.p == 1:
                result = solve_p1(h, Lp)
            else:
                result = solve_pp_local(h, Lp, config.p)

        logger.info(f"Recovery ({'pipeline' if pipeline else 'analysis'}) correlation {result.correlation:.9f}")
        document = RecoveryResultDocument.model_validate(result)
        document.verdict = verdict
        return document
    except CommandError:
        raise
    except (SimoidError, ValidationError) as e:
        detail = e.detail if isinstance(e, SimoidError) else str(e)
        logger.error(f"recover failed: {detail}")
        raise CommandError(1, detail)
    except Exception as e:
        logger.error(f"Unexpected error in recover: {str(e)}")
        raise CommandError(1, f"Internal error: {str(e)}")

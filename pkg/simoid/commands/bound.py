import io
import logging
import os
from typing import List, Optional

from pydantic import ValidationError

from simoid.config import get_settings
from simoid.errors import CommandError, SimoidError
from simoid.models import BoundPoint
from simoid.schemas import ExperimentConfig
from simoid.services.probability import bound_l1_delta1, monte_carlo_probability, sweep, write_csv, write_rows

logger = logging.getLogger(__name__)


def summary_line(point: BoundPoint) -> str:
    """One human-readable line per grid point"""
    parts = [f"M={point.M}", f"L={point.L}", f"delta={point.delta}", f"p={point.p:g}"]
    if point.bound is not None:
        parts.append(f"bound={point.bound:.6f}")
        parts.append(f"eps_star={point.eps_star:.6f}")
    if point.mc_estimate is not None:
        parts.append(f"mc={point.mc_estimate:.6f}+-{point.mc_halfwidth:.6f}")
        parts.append(f"trials={point.trials}")
    return " ".join(parts)


def _emit(points: List[BoundPoint], out: Optional[str]) -> List[str]:
    """
    Write the CSV to ``out`` and return summary lines, or return the CSV
    itself as lines when no output path is given
    """
    if out:
        path = out if os.path.isabs(out) else os.path.join(get_settings().output_dir, out)
        try:
            write_csv(points, path)
        except OSError as e:
            raise CommandError(1, f"cannot write CSV to '{path}': {e}")
        return [summary_line(point) for point in points]

    buffer = io.StringIO()
    write_rows(points, buffer)
    return buffer.getvalue().splitlines()


def _require(value, name: str):
    if value is None:
        raise CommandError(1, f"missing parameter '{name}'")
    return value


def _run(label: str, action) -> List[str]:
    try:
        return action()
    except CommandError:
        raise
    except (SimoidError, ValidationError) as e:
        detail = e.detail if isinstance(e, SimoidError) else str(e)
        logger.error(f"{label} failed: {detail}")
        raise CommandError(1, detail)
    except Exception as e:
        logger.error(f"Unexpected error in {label}: {str(e)}")
        raise CommandError(1, f"Internal error: {str(e)}")


def cmd_bound(config: ExperimentConfig) -> List[str]:
    """Evaluate the delta=1 lower bound for one (M, L); the bound exists for p = 1 only"""
    def action():
        if config.p != 1:
            raise CommandError(
                1, f"the closed-form bound covers p = 1 only, got p = {config.p:g}; use montecarlo for p < 1"
            )
        point = bound_l1_delta1(_require(config.M, "M"), _require(config.L, "L"))
        return _emit([point], config.out)
    return _run("bound", action)


def cmd_montecarlo(config: ExperimentConfig, workers: int = 1) -> List[str]:
    """Monte Carlo frequency (with the bound when delta = 1) for one (M, L)"""
    def action():
        point = monte_carlo_probability(
            _require(config.M, "M"), _require(config.L, "L"),
            config.p, config.trials, config.seed, config.delta, workers
        )
        return _emit([point], config.out)
    return _run("montecarlo", action)


def cmd_sweep(config: ExperimentConfig, workers: int = 1) -> List[str]:
    """Bound and Monte Carlo estimate over the M_list x L_list grid"""
    def action():
        points = sweep(
            _require(config.M_list, "M_list"), _require(config.L_list, "L_list"),
            config.p, config.trials, config.seed, config.delta, workers
        )
        return _emit(points, config.out)
    return _run("sweep", action)

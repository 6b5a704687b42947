from functools import lru_cache
from typing import Optional
import os

from pydantic import BaseModel, Field, ValidationError

from simoid.errors import ParameterError
from simoid.schemas import ExperimentConfig


class Settings(BaseModel):
    """Process-wide defaults read from the environment (and .env)"""

    log_level: str = Field("INFO", description="Root logging level")
    workers: int = Field(1, ge=1, le=256, description="Process pool width for sweeps")
    default_seed: Optional[int] = Field(None, ge=0, description="Seed used when --seed is absent")
    output_dir: str = Field(".", description="Directory for relative --out paths")


@lru_cache()
def get_settings() -> Settings:
    """Build settings from SIMOID_* environment variables"""
    seed = os.getenv("SIMOID_DEFAULT_SEED")
    return Settings(
        log_level=os.getenv("SIMOID_LOG_LEVEL", "INFO").upper(),
        workers=int(os.getenv("SIMOID_WORKERS", "1")),
        default_seed=int(seed) if seed else None,
        output_dir=os.getenv("SIMOID_OUTPUT_DIR", "."),
    )


def load_experiment_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """
    Parse a flat ``key = value`` config file into an ExperimentConfig

    Lines starting with ``#`` and blank lines are skipped. Values given in
    ``overrides`` (command-line flags) win over file values.

    Raises:
        ParameterError: unreadable file, malformed line or invalid field,
            with the offending line number in the message
    """
    values = {}
    lines = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw_lines = handle.readlines()
    except OSError as e:
        raise ParameterError(f"cannot read config file '{path}': {e}")

    for number, raw in enumerate(raw_lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{number}: expected 'key = value', got '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in ExperimentConfig.model_fields:
            raise ParameterError(f"{path}:{number}: unknown field '{key}'")
        values[key] = value
        lines[key] = number

    applied = {k: v for k, v in (overrides or {}).items() if v is not None}
    values.update(applied)
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        messages = []
        for error in e.errors():
            field = str(error["loc"][0]) if error["loc"] else "?"
            where = f"{path}:{lines[field]}" if field in lines and field not in applied else "flag"
            messages.append(f"{where}: field '{field}': {error['msg']}")
        raise ParameterError("; ".join(messages))

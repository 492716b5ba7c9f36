"""
Run settings read from the environment (and a .env file, if present).

Settings only steer reproducibility and verbosity; problem data always comes
from the problem file.
"""

import logging
import os
from typing import Mapping, Optional

from annotated_types import Ge
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, field_validator
from typing_extensions import Annotated

ENV_PREFIX = "TSDE_"


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = 20240601
    log_level: str = "WARNING"
    sweep_instances: Annotated[int, Ge(1)] = 200

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.strip().upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"unknown log level {value!r}")
        return level

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Settings":
        """Build settings from TSDE_* variables; unset ones keep their defaults."""
        if environ is None:
            load_dotenv()
            environ = os.environ
        values = {
            name: environ[ENV_PREFIX + name.upper()]
            for name in cls.model_fields
            if ENV_PREFIX + name.upper() in environ
        }
        return cls(**values)

"""Process-level settings read from the environment (and an optional .env file)."""

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

PROJECT_ROOT = Path(__file__).resolve().parent.parent


@dataclass(frozen=True)
class Settings:
    log_level: str
    profile_dir: Path
    out_dir: Path
    jobs: int
    host: str
    port: int


def get_settings() -> Settings:
    """Read settings from the environment; unset values fall back to defaults."""
    profile_dir = Path(os.getenv("VNSIM_PROFILE_DIR", PROJECT_ROOT / "data" / "profiles"))
    return Settings(
        log_level=os.getenv("VNSIM_LOG_LEVEL", "INFO").upper(),
        profile_dir=profile_dir,
        out_dir=Path(os.getenv("VNSIM_OUT_DIR", "results")),
        jobs=max(1, int(os.getenv("VNSIM_JOBS", "1"))),
        host=os.getenv("VNSIM_HOST", "0.0.0.0"),
        port=int(os.getenv("VNSIM_PORT", "8000")),
    )

"""
Configuration settings for the drug review recommender.
"""

from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="DRUGREC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Artifacts
    output_dir: Path = Field(default=Path("./artifacts"), description="Default pipeline output directory")

    # Logging
    log_level: str = Field(default="INFO")
    log_file: Path = Field(default=Path("./logs/drugrec.log"))
    log_rotation: str = Field(default="10 MB")
    log_retention: str = Field(default="7 days")

    # Parallel Processing
    max_workers: int = Field(default=4, ge=1)

    # Real corpus location for the opt-in integration tests
    uci_dir: Optional[Path] = Field(default=None)

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        # Ensure log directory exists
        self.log_file.parent.mkdir(parents=True, exist_ok=True)

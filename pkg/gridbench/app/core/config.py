"""
Application Configuration

Manages process-level settings using Pydantic Settings.
Supports environment variables (prefix GRIDBENCH_) and .env files.
"""

from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with validation."""

    # Application
    APP_NAME: str = "EEA Network Benchmark"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "text"  # json or text

    # Outputs
    OUTPUT_DIR: str = "runs"

    # Simulation
    WORKERS: int = Field(default=1, ge=1)
    PROGRESS_INTERVAL: int = Field(default=1440, ge=1)  # steps

    model_config = SettingsConfigDict(
        env_prefix="GRIDBENCH_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        if v.upper() not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unsupported LOG_LEVEL: {v}")
        return v.upper()

    @field_validator("LOG_FORMAT")
    @classmethod
    def validate_log_format(cls, v):
        if v not in {"json", "text"}:
            raise ValueError("LOG_FORMAT must be 'json' or 'text'")
        return v

    @property
    def output_path(self) -> Path:
        """Return the default output directory as a path."""
        return Path(self.OUTPUT_DIR)


# Create settings instance
settings = Settings()

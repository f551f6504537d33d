"""
BroadcastBench Configuration
Settings loaded from the environment (prefix BSIM_) with validation
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, field_validator
from functools import lru_cache
import sys
import logging

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Workbench settings loaded from environment variables with validation"""

    model_config = SettingsConfigDict(
        env_prefix="BSIM_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    # App Info
    APP_NAME: str = Field(
        "BroadcastBench",
        description="Application name"
    )
    APP_VERSION: str = Field(
        "1.0.0",
        description="Application version"
    )
    LOG_LEVEL: str = Field(
        "INFO",
        description="Logging level"
    )
    ENVIRONMENT: str = Field(
        "development",
        description="Environment name (development/staging/production)"
    )

    # Oracle
    ORACLE_CAP: int = Field(
        8,
        description="Largest total job count (sum of multiplicities) the exhaustive oracle accepts"
    )

    # Verification drivers
    WORKERS: int = Field(
        1,
        description="Worker threads used to fan out verification families"
    )
    DEFAULT_SEED: int = Field(
        0,
        description="Seed used by randomized commands when --seed is not given"
    )

    # Engine
    EVENT_LOG_ENABLED: bool = Field(
        False,
        description="Write the engine event log to stderr when no --log path is given"
    )

    # HTTP surface
    API_PREFIX: str = Field(
        "/api/v1",
        description="Path prefix of the HTTP API router"
    )

    # Validators
    @field_validator('ORACLE_CAP')
    @classmethod
    def validate_oracle_cap(cls, v: int) -> int:
        """Oracle cap must admit at least one job"""
        if v < 1:
            raise ValueError("ORACLE_CAP must be at least 1")
        return v

    @field_validator('WORKERS')
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("WORKERS must be at least 1")
        if v > 256:
            raise ValueError("WORKERS cannot exceed 256")
        return v

    @field_validator('LOG_LEVEL')
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level"""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(
                f"LOG_LEVEL must be one of: {', '.join(valid_levels)}"
            )
        return v_upper

    @field_validator('ENVIRONMENT')
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """Validate environment name"""
        valid_envs = ["development", "staging", "production"]
        v_lower = v.lower()
        if v_lower not in valid_envs:
            raise ValueError(
                f"ENVIRONMENT must be one of: {', '.join(valid_envs)}"
            )
        return v_lower

    @field_validator('API_PREFIX')
    @classmethod
    def validate_api_prefix(cls, v: str) -> str:
        if not v.startswith("/"):
            raise ValueError("API_PREFIX must start with '/'")
        return v.rstrip("/")

    @property
    def is_production(self) -> bool:
        """Check if running in production environment"""
        return self.ENVIRONMENT == "production"


@lru_cache()
def get_settings() -> Settings:
    """
    Cached settings instance with validation error handling

    Returns:
        Settings instance

    Raises:
        SystemExit: If configuration is invalid (exit code 2, usage error)
    """
    try:
        settings = Settings()
        logger.debug("✅ Configuration loaded successfully")
        return settings
    except Exception as e:
        print(f"\n❌ Configuration Error:\n{str(e)}\n", file=sys.stderr)
        print("Check the BSIM_* environment variables and your .env file.\n", file=sys.stderr)
        sys.exit(2)


# Global singleton instance
settings = get_settings()

__all__ = ["settings", "get_settings", "Settings"]

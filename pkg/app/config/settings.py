"""
Configuration management for the PerfOracle RTT prediction toolkit.

Uses pydantic-settings to load environment variables (prefix ``PERFORACLE_``)
and provide toolkit configuration as a singleton.
"""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Toolkit settings loaded from environment variables.

    Attributes:
        THREADS: Upper bound on worker threads for parallel stages
        LOG_LEVEL: Root log level for the CLI
        SCRAPE_INTERVAL_MS: Nominal monitoring sampling period
        DEFAULT_SEED: Seed used when a command gets no --seed
        TAU: Inference budget as a fraction of the mean RTT
        THETA: Inter-correlation threshold for redundancy removal
        REMOTE_TIMEOUT_S: HTTP timeout for range queries
        REMOTE_RETRIES: Attempts per range query before giving up
        REMOTE_BACKOFF_S: First retry delay, doubled after every failure
        RESULTS_DB_URL: SQLAlchemy URL of the selection history ("" disables it)
        MOCK_HOST: Bind address of the bundled mock monitoring endpoint
        MOCK_PORT: Port of the bundled mock monitoring endpoint
    """

    model_config = SettingsConfigDict(env_prefix="PERFORACLE_", env_file=".env", extra="ignore")

    THREADS: int = Field(default=4, ge=1)
    LOG_LEVEL: str = "INFO"
    SCRAPE_INTERVAL_MS: int = Field(default=200, gt=0)
    DEFAULT_SEED: int = 0
    TAU: float = Field(default=0.01, gt=0)
    THETA: float = Field(default=0.90, gt=0, le=1)
    REMOTE_TIMEOUT_S: float = 10.0
    REMOTE_RETRIES: int = Field(default=3, ge=1)
    REMOTE_BACKOFF_S: float = Field(default=0.5, ge=0)
    RESULTS_DB_URL: str = ""  # e.g. "sqlite:///data/perforacle.db"
    MOCK_HOST: str = "127.0.0.1"
    MOCK_PORT: int = 9090


@lru_cache()
def get_settings() -> Settings:
    """
    Return a singleton instance of Settings.

    Returns:
        Settings: The toolkit configuration instance
    """
    return Settings()

from typing import Any, Annotated, Literal

from pydantic import (
    AnyUrl,
    BeforeValidator,
    HttpUrl,
    computed_field,
    model_validator,
)
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing_extensions import Self


def parse_cors(v: Any) -> list[str] | str:
    if isinstance(v, str) and not v.startswith("["):
        return [i.strip() for i in v.split(",") if i.strip()]
    elif isinstance(v, list | str):
        return v
    raise ValueError(v)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_ignore_empty=True,
        extra="ignore",
    )
    API_V_STR: str = "/api/v1"
    ENVIRONMENT: Literal["local", "staging", "production"] = "local"

    CORS_ORIGINS: Annotated[list[AnyUrl] | str, BeforeValidator(parse_cors)] = []

    @computed_field
    @property
    def all_cors_origins(self) -> list[str]:
        return [str(origin).rstrip("/") for origin in self.CORS_ORIGINS]

    PROJECT_NAME: str = "Orderflow Persistence API"
    SENTRY_DSN: HttpUrl | None = None
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    # decomposition
    TAU_MAX: int = 100
    MIN_EVENTS: int = 100
    RATIO_FLOOR: float = 1e-6
    PAIR_MEMORY_CAP: int = 50_000_000  # M*M*tau_max matrix entries
    S_BAR_TAU_MAX: int = 50
    TOP_K_AGENTS: int = 15

    # shuffle test
    SHUFFLE_REPLICATES: int = 1000
    SHUFFLE_WARN_REPLICATES: int = 10_000
    SHUFFLE_MAX_REPLICATES: int = 1_000_000
    ALPHA: float = 0.05

    # brokerage
    REBALANCE_TOLERANCE: float = 0.1  # fraction of min(P')
    REBALANCE_MAX_PASSES: int = 100
    DYNAMIC_MAP_CHUNK: int = 65_536

    # power-law fitting
    FIT_BINS_PER_DECADE: int = 10
    FIT_MIN_R2: float = 0.98
    FIT_MIN_POINTS: int = 10

    WORKERS: int = 1

    def _check_positive(self, var_name: str, value: float) -> None:
        if value <= 0:
            raise ValueError(f"{var_name} must be positive, got {value}")

    @model_validator(mode="after")
    def _enforce_ranges(self) -> Self:
        for name in (
            "TAU_MAX",
            "MIN_EVENTS",
            "RATIO_FLOOR",
            "PAIR_MEMORY_CAP",
            "S_BAR_TAU_MAX",
            "SHUFFLE_REPLICATES",
            "REBALANCE_TOLERANCE",
            "REBALANCE_MAX_PASSES",
            "DYNAMIC_MAP_CHUNK",
            "FIT_BINS_PER_DECADE",
            "WORKERS",
        ):
            self._check_positive(name, getattr(self, name))
        if not 0 < self.ALPHA < 1:
            raise ValueError(f"ALPHA must lie in (0, 1), got {self.ALPHA}")
        if self.SHUFFLE_WARN_REPLICATES > self.SHUFFLE_MAX_REPLICATES:
            raise ValueError("SHUFFLE_WARN_REPLICATES exceeds SHUFFLE_MAX_REPLICATES")
        return self


settings = Settings()

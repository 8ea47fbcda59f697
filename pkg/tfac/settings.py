from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    APP_TITLE: str = "tfac"
    APP_VERSION: str = "1.0.0"

    LOG_LEVEL: str = "INFO"

    NEWTON_TOL: float = 1e-12
    NEWTON_MAX_ITERS: int = 50
    CG_TOL: float = 1e-14
    CG_MAX_ITERS: int = 500

    SOE_TOL: float = 1e-12
    SOE_CUTOFF: float = 1e-12
    SOE_SAMPLES: int = 10_000
    SOE_MAX_REFINEMENTS: int = 6
    SOE_EXACT_LAST_CELL: bool = True

    OUTPUT_DIR: str = "output"

    MAX_WORKERS: int = 1
    MAX_RUN_TIME: int | None = None
    MAX_PROCESS_MEMORY: int | None = None
    MAX_PROCESS_CPU_TIME: int | None = None

    model_config = SettingsConfigDict(env_file=".env", env_prefix="TFAC_")


settings = Settings(**{})

"""Configuration management for atmpnet."""

import os
from typing import Optional
from dotenv import load_dotenv

load_dotenv()


class Config:
    """Application configuration.

    Every value here is only a default: the operations that use one accept
    an explicit keyword override.
    """

    # Exact search budgets
    NODE_LIMIT: int = int(os.getenv("ATMPNET_NODE_LIMIT", "10000000"))
    TIME_LIMIT: float = float(os.getenv("ATMPNET_TIME_LIMIT", "60"))

    # Model defaults
    CRYO_LEG_LIMIT: float = float(os.getenv("ATMPNET_CRYO_LEG_LIMIT", "24"))
    FEASIBILITY_TOL: float = float(os.getenv("ATMPNET_FEASIBILITY_TOL", "1e-9"))

    # Pareto front grid
    COST_LEVELS: int = int(os.getenv("ATMPNET_COST_LEVELS", "16"))

    # Local search
    HEURISTIC_STARTS: int = int(os.getenv("ATMPNET_HEURISTIC_STARTS", "4"))
    MAX_NO_IMPROVE: int = int(os.getenv("ATMPNET_MAX_NO_IMPROVE", "10"))

    # Oracle enumeration guard
    ORACLE_LIMIT: int = int(os.getenv("ATMPNET_ORACLE_LIMIT", "10000000"))

    # Parallel front cells and heuristic starts
    WORKERS: int = int(os.getenv("ATMPNET_WORKERS", "1"))

    LOG_LEVEL: str = os.getenv("ATMPNET_LOG_LEVEL", "WARNING")
    LOG_FORMAT: Optional[str] = os.getenv("ATMPNET_LOG_FORMAT")

    @classmethod
    def validate(cls) -> None:
        """Validate configuration."""
        if cls.NODE_LIMIT < 1:
            raise ValueError("ATMPNET_NODE_LIMIT must be at least 1")
        if cls.TIME_LIMIT <= 0:
            raise ValueError("ATMPNET_TIME_LIMIT must be positive")
        if cls.CRYO_LEG_LIMIT < 0:
            raise ValueError("ATMPNET_CRYO_LEG_LIMIT must be nonnegative")
        if cls.FEASIBILITY_TOL < 0:
            raise ValueError("ATMPNET_FEASIBILITY_TOL must be nonnegative")
        if cls.COST_LEVELS < 1:
            raise ValueError("ATMPNET_COST_LEVELS must be at least 1")
        if cls.HEURISTIC_STARTS < 1 or cls.MAX_NO_IMPROVE < 1:
            raise ValueError("ATMPNET_HEURISTIC_STARTS and ATMPNET_MAX_NO_IMPROVE must be at least 1")
        if cls.ORACLE_LIMIT < 1:
            raise ValueError("ATMPNET_ORACLE_LIMIT must be at least 1")
        if cls.WORKERS < 1:
            raise ValueError("ATMPNET_WORKERS must be at least 1")


config = Config()
